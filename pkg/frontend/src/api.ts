import { bytesToB64 } from "./encoding.js";
import type { ExtractParams, ExtractStats, LandmarkDoc, StyleDoc } from "./types.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly reason: string,
  ) {
    super(`service error ${status}: ${reason}`);
  }
}

async function readError(res: Response): Promise<ServiceError> {
  let reason = res.statusText;
  try {
    const doc = await res.json();
    if (doc && typeof doc.error === "string") reason = doc.error;
  } catch {
    /* non-JSON error body */
  }
  return new ServiceError(res.status, reason);
}

/** Thin client for the maskforge /v1 endpoints (JSON + base64 payloads). */
export class TryonClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async postForPng(path: string, body: unknown): Promise<Response> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw await readError(res);
    return res;
  }

  async health(): Promise<boolean> {
    try {
      const res = await this.fetchFn(`${this.baseUrl}/healthz`);
      return res.ok;
    } catch {
      return false;
    }
  }

  async styles(): Promise<{ templates: { id: string; region: string }[] }> {
    const res = await this.fetchFn(`${this.baseUrl}/v1/styles`);
    if (!res.ok) throw await readError(res);
    return res.json();
  }

  async extract(req: {
    photo: Uint8Array;
    landmarks: LandmarkDoc;
    parsing: Uint8Array;
    params: ExtractParams;
  }): Promise<{ maskPng: Uint8Array; stats: ExtractStats }> {
    const res = await this.postForPng("/v1/extract", {
      photo_b64: bytesToB64(req.photo),
      landmarks: req.landmarks,
      parsing_b64: bytesToB64(req.parsing),
      params: req.params,
    });
    const stats = JSON.parse(res.headers.get("X-Extract-Stats") ?? "{}") as ExtractStats;
    return { maskPng: new Uint8Array(await res.arrayBuffer()), stats };
  }

  async apply(req: {
    maskPng: Uint8Array;
    frame: Uint8Array;
    landmarks: LandmarkDoc;
    parsing?: Uint8Array;
    alphaScale?: number;
  }): Promise<{ png: Uint8Array; warning: string | null }> {
    const body: Record<string, unknown> = {
      mask_b64: bytesToB64(req.maskPng),
      frame_b64: bytesToB64(req.frame),
      landmarks: req.landmarks,
    };
    if (req.parsing) body.parsing_b64 = bytesToB64(req.parsing);
    if (req.alphaScale !== undefined) body.options = { alpha_scale: req.alphaScale };
    const res = await this.postForPng("/v1/apply", body);
    return {
      png: new Uint8Array(await res.arrayBuffer()),
      warning: res.headers.get("X-Warning"),
    };
  }

  async synthesize(req: { seed?: number; style?: StyleDoc }): Promise<{
    maskPng: Uint8Array;
    style: StyleDoc | null;
  }> {
    const res = await this.postForPng("/v1/synthesize", req);
    const styleHeader = res.headers.get("X-Style");
    return {
      maskPng: new Uint8Array(await res.arrayBuffer()),
      style: styleHeader ? (JSON.parse(styleHeader) as StyleDoc) : null,
    };
  }
}

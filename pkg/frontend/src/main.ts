import { ServiceError, TryonClient } from "./api.js";
import { sha256Hex } from "./encoding.js";
import {
  alphaHistogram,
  drawHistogram,
  drawPng,
  drawPngOverCheckerboard,
  pngAlphaBytes,
} from "./render.js";
import { Debouncer, UiSession } from "./state.js";
import type { FrameEntry, LandmarkDoc, StyleDoc } from "./types.js";
import { K_RANGE, filterStyle } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

interface ReferenceBundle {
  photo: Uint8Array;
  landmarks: LandmarkDoc;
  parsing: Uint8Array;
}

async function readBundle(files: FileList): Promise<Partial<ReferenceBundle>> {
  const out: Partial<ReferenceBundle> = {};
  for (const file of files) {
    const bytes = new Uint8Array(await file.arrayBuffer());
    if (file.name.endsWith(".json")) {
      out.landmarks = JSON.parse(new TextDecoder().decode(bytes)) as LandmarkDoc;
    } else if (file.name.endsWith("_seg.png")) {
      out.parsing = bytes;
    } else if (file.name.endsWith(".png")) {
      out.photo = bytes;
    }
  }
  return out;
}

async function readFrames(files: FileList): Promise<FrameEntry[]> {
  const images = new Map<string, Uint8Array>();
  const landmarks = new Map<string, LandmarkDoc>();
  const parsing = new Map<string, Uint8Array>();
  for (const file of files) {
    const bytes = new Uint8Array(await file.arrayBuffer());
    if (file.name.endsWith(".json")) {
      landmarks.set(
        file.name.slice(0, -5),
        JSON.parse(new TextDecoder().decode(bytes)) as LandmarkDoc,
      );
    } else if (file.name.endsWith("_seg.png")) {
      parsing.set(file.name.slice(0, -8), bytes);
    } else if (file.name.endsWith(".png")) {
      images.set(file.name.slice(0, -4), bytes);
    }
  }
  const frames: FrameEntry[] = [];
  for (const [stem, img] of [...images.entries()].sort()) {
    const lm = landmarks.get(stem);
    if (!lm) continue; // frames without landmarks cannot be warped
    frames.push({
      name: stem,
      landmarks: lm,
      imageBytes: img,
      parsingBytes: parsing.get(stem),
    });
  }
  return frames;
}

class App {
  session = new UiSession();
  extractDebounce = new Debouncer(150);
  applyDebounce = new Debouncer(150);
  client = new TryonClient("http://127.0.0.1:8000");

  reference: ReferenceBundle | null = null;
  frames: FrameEntry[] = [];
  lastStyle: StyleDoc | null = null;
  roundTrips: number[] = [];

  banner = el<HTMLDivElement>("banner");
  maskCanvas = el<HTMLCanvasElement>("mask-canvas");
  histCanvas = el<HTMLCanvasElement>("hist-canvas");
  origCanvas = el<HTMLCanvasElement>("orig-canvas");
  resultCanvas = el<HTMLCanvasElement>("result-canvas");

  init(): void {
    const url = el<HTMLInputElement>("svc-url");
    url.value = this.client.baseUrl;
    url.addEventListener("change", () => {
      this.client = new TryonClient(url.value.replace(/\/$/, ""));
      void this.pollHealth();
    });
    void this.pollHealth();
    setInterval(() => void this.pollHealth(), 5000);

    el<HTMLInputElement>("ref-files").addEventListener("change", (e) => {
      void this.onReferenceUpload((e.target as HTMLInputElement).files);
    });
    el<HTMLInputElement>("frame-files").addEventListener("change", (e) => {
      void this.onFramesUpload((e.target as HTMLInputElement).files);
    });

    const k = el<HTMLInputElement>("k");
    k.min = String(K_RANGE.min);
    k.max = String(K_RANGE.max);
    k.value = String(K_RANGE.default);
    for (const [id, field] of [
      ["k", "k"],
      ["s", "s"],
      ["seed", "seed"],
    ] as const) {
      el<HTMLInputElement>(id).addEventListener("input", () => {
        this.commitParams({ [field]: true });
      });
    }
    el<HTMLInputElement>("alpha-scale").addEventListener("input", () => this.commitDisplay());
    for (const id of ["tog-eyes", "tog-lips", "tog-cheeks"] as const) {
      el<HTMLInputElement>(id).addEventListener("change", () => this.commitToggles());
    }
    el<HTMLButtonElement>("synthesize").addEventListener("click", () => {
      void this.synthesize();
    });
    el<HTMLInputElement>("scrubber").addEventListener("input", (e) => {
      this.session.commit((s) => {
        s.frameIndex = Number((e.target as HTMLInputElement).value);
      });
      void this.showOriginal();
      this.applyDebounce.schedule(() => void this.applyCurrent(this.session.currentSeq));
    });
  }

  async pollHealth(): Promise<void> {
    const ok = await this.client.health();
    el<HTMLSpanElement>("svc-dot").className = ok ? "dot ok" : "dot bad";
  }

  showError(message: string): void {
    this.banner.textContent = message;
    this.banner.hidden = false;
  }

  clearError(): void {
    this.banner.hidden = true;
  }

  readParams(): void {
    this.session.params = {
      k: Number(el<HTMLInputElement>("k").value),
      s: Number(el<HTMLInputElement>("s").value),
      seed: Number(el<HTMLInputElement>("seed").value),
    };
    el<HTMLSpanElement>("k-val").textContent = String(this.session.params.k);
    el<HTMLSpanElement>("s-val").textContent = String(this.session.params.s);
  }

  commitParams(changed: { k?: boolean; s?: boolean; seed?: boolean }): void {
    const seq = this.session.commit(() => this.readParams());
    if (UiSession.changeKind(changed) === "extract" && this.reference) {
      this.extractDebounce.schedule(() => void this.extract(seq));
    }
  }

  commitDisplay(): void {
    const scale = Number(el<HTMLInputElement>("alpha-scale").value);
    el<HTMLSpanElement>("alpha-val").textContent = scale.toFixed(2);
    const seq = this.session.commit((s) => {
      s.alphaScale = scale;
    });
    this.applyDebounce.schedule(() => void this.applyCurrent(seq));
  }

  commitToggles(): void {
    const seq = this.session.commit((s) => {
      s.toggles = {
        eyes: el<HTMLInputElement>("tog-eyes").checked,
        lips: el<HTMLInputElement>("tog-lips").checked,
        cheeks: el<HTMLInputElement>("tog-cheeks").checked,
      };
    });
    // toggles re-render the synthesized look; extracted masks are eyes-only
    if (this.lastStyle) {
      this.applyDebounce.schedule(() => void this.synthesize(seq));
    } else {
      this.applyDebounce.schedule(() => void this.applyCurrent(seq));
    }
  }

  async onReferenceUpload(files: FileList | null): Promise<void> {
    if (!files || files.length === 0) return;
    const bundle = await readBundle(files);
    if (!bundle.photo || !bundle.landmarks || !bundle.parsing) {
      this.showError(
        "reference upload needs photo.png + photo.json landmarks + photo_seg.png parsing",
      );
      return;
    }
    this.reference = bundle as ReferenceBundle;
    this.lastStyle = null;
    const seq = this.session.commit(() => this.readParams());
    await this.extract(seq);
  }

  async onFramesUpload(files: FileList | null): Promise<void> {
    if (!files || files.length === 0) return;
    this.frames = await readFrames(files);
    if (this.frames.length === 0) {
      this.showError("no usable frames: each NNN.png needs a matching NNN.json");
      return;
    }
    const scrubber = el<HTMLInputElement>("scrubber");
    scrubber.max = String(this.frames.length - 1);
    scrubber.value = "0";
    // scrubber only makes sense with more than one frame
    el<HTMLDivElement>("scrub-row").hidden = this.frames.length < 2;
    const seq = this.session.commit((s) => {
      s.frameIndex = 0;
    });
    await this.showOriginal();
    await this.applyCurrent(seq);
  }

  async extract(seq: number): Promise<void> {
    if (!this.reference) return;
    try {
      const { maskPng, stats } = await this.client.extract({
        photo: this.reference.photo,
        landmarks: this.reference.landmarks,
        parsing: this.reference.parsing,
        params: this.session.params,
      });
      const checksum = await sha256Hex(maskPng);
      if (!this.session.tryDisplay(seq, "extract", maskPng, checksum)) return; // stale
      this.clearError();
      await this.renderMask(maskPng, checksum, stats.elapsed_ms);
      // parameter change that re-extracts also refreshes the preview
      const applySeq = this.session.commit(() => {});
      await this.applyCurrent(applySeq);
    } catch (err) {
      this.reportServiceError("extract", err);
    }
  }

  async synthesize(seq?: number): Promise<void> {
    try {
      let style: StyleDoc | null = null;
      const synthSeed = Number(el<HTMLInputElement>("synth-seed").value);
      if (this.lastStyle && seq !== undefined) {
        style = this.lastStyle;
      } else {
        const sampled = await this.client.synthesize({ seed: synthSeed });
        style = sampled.style;
        this.lastStyle = style;
        seq = this.session.commit(() => {});
      }
      if (!style) return;
      const filtered = filterStyle(style, this.session.toggles);
      if (Object.keys(filtered.regions).length === 0) {
        this.showError("all regions toggled off");
        return;
      }
      const { maskPng } = await this.client.synthesize({ style: filtered });
      const checksum = await sha256Hex(maskPng);
      if (!this.session.tryDisplay(seq, "extract", maskPng, checksum)) return;
      this.clearError();
      await this.renderMask(maskPng, checksum, null);
      const applySeq = this.session.commit(() => {});
      await this.applyCurrent(applySeq);
    } catch (err) {
      this.reportServiceError("synthesize", err);
    }
  }

  async renderMask(maskPng: Uint8Array, checksum: string, elapsedMs: number | null): Promise<void> {
    await drawPngOverCheckerboard(this.maskCanvas, maskPng);
    drawHistogram(this.histCanvas, alphaHistogram(await pngAlphaBytes(maskPng)));
    el<HTMLSpanElement>("mask-checksum").textContent = checksum.slice(0, 16);
    el<HTMLSpanElement>("extract-ms").textContent =
      elapsedMs === null ? "" : `${elapsedMs.toFixed(0)} ms`;
  }

  async showOriginal(): Promise<void> {
    const frame = this.frames[this.session.frameIndex];
    if (!frame) return;
    el<HTMLSpanElement>("frame-label").textContent = frame.name;
    await drawPng(this.origCanvas, frame.imageBytes);
  }

  async applyCurrent(seq: number): Promise<void> {
    const frame = this.frames[this.session.frameIndex];
    const mask = this.session.maskPng;
    if (!frame || !mask) return;
    try {
      const t0 = performance.now();
      const { png, warning } = await this.client.apply({
        maskPng: mask,
        frame: frame.imageBytes,
        landmarks: frame.landmarks,
        parsing: frame.parsingBytes,
        alphaScale: this.session.alphaScale,
      });
      const dt = performance.now() - t0;
      if (!this.session.tryDisplay(seq, "apply", png)) return; // stale
      this.clearError();
      this.roundTrips.push(dt);
      if (this.roundTrips.length > 50) this.roundTrips.shift();
      const sorted = [...this.roundTrips].sort((a, b) => a - b);
      const p95 = sorted[Math.min(sorted.length - 1, Math.floor(sorted.length * 0.95))];
      el<HTMLSpanElement>("latency").textContent =
        `${dt.toFixed(0)} ms (p95 ${p95.toFixed(0)} ms)`;
      el<HTMLSpanElement>("apply-warning").textContent = warning ?? "";
      await drawPng(this.resultCanvas, png);
    } catch (err) {
      this.reportServiceError("apply", err);
    }
  }

  reportServiceError(op: string, err: unknown): void {
    if (err instanceof ServiceError) {
      // surface the machine-readable reason; the previous preview stays up
      this.showError(`${op} failed (${err.status}): ${err.reason}`);
    } else {
      this.showError(`${op} failed: ${String(err)}`);
    }
  }
}

new App().init();

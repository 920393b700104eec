export interface LandmarkDoc {
  layout_id: string;
  points: [number, number][];
}

export interface ExtractParams {
  k: number;
  s: number;
  seed: number;
}

export const DEFAULT_PARAMS: ExtractParams = { k: 6, s: 2, seed: 0 };

export const K_RANGE = { min: 2, max: 12, default: 6 } as const;

export interface RegionToggles {
  eyes: boolean;
  lips: boolean;
  cheeks: boolean;
}

export const ALL_REGIONS_ON: RegionToggles = { eyes: true, lips: true, cheeks: true };

export interface RegionStyleDoc {
  template_id: string;
  color: [number, number, number];
  opacity: number;
  finish: string;
}

export interface StyleDoc {
  seed?: number;
  regions: Record<string, RegionStyleDoc>;
}

export interface ExtractStats {
  skin_tone_lab: Record<string, number[]>;
  cluster_counts: Record<string, number[]>;
  elapsed_ms: number;
}

export interface FrameEntry {
  name: string;
  landmarks: LandmarkDoc;
  imageBytes: Uint8Array;
  parsingBytes?: Uint8Array;
}

/** Maps a UI region toggle to the style regions it controls. */
export const TOGGLE_REGIONS: Record<keyof RegionToggles, string[]> = {
  eyes: ["eyeshadow", "eyeliner"],
  lips: ["lipstick"],
  cheeks: ["blush"],
};

/** Drop style regions whose toggle is off; never mutates the input. */
export function filterStyle(style: StyleDoc, toggles: RegionToggles): StyleDoc {
  const allowed = new Set<string>();
  for (const key of Object.keys(TOGGLE_REGIONS) as (keyof RegionToggles)[]) {
    if (toggles[key]) TOGGLE_REGIONS[key].forEach((r) => allowed.add(r));
  }
  const regions: Record<string, RegionStyleDoc> = {};
  for (const [name, rs] of Object.entries(style.regions)) {
    if (allowed.has(name)) regions[name] = rs;
  }
  return { seed: style.seed, regions };
}

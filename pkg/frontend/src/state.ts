import type { ExtractParams, RegionToggles } from "./types.js";
import { ALL_REGIONS_ON, DEFAULT_PARAMS } from "./types.js";

/**
 * Trailing-edge debouncer: rapid calls coalesce and only the last one fires
 * after `delayMs` of quiet. Used on sliders so a drag issues one request.
 */
export class Debouncer {
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(readonly delayMs: number = 150) {}

  schedule(fn: () => void): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      fn();
    }, this.delayMs);
  }

  cancel(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }
}

export type PreviewKind = "extract" | "apply";

/**
 * Session state with a committed-parameter sequence number.
 *
 * Every parameter commit bumps `seq`; a network response is displayed only if
 * it carries the latest seq, so out-of-order responses can never replace a
 * newer preview (the displayed preview always matches the highest committed
 * parameter set).
 */
export class UiSession {
  params: ExtractParams = { ...DEFAULT_PARAMS };
  toggles: RegionToggles = { ...ALL_REGIONS_ON };
  alphaScale = 1.0;
  frameIndex = 0;

  private seq = 0;
  private displayedSeq = -1;

  /** Displayed artifacts (set only through tryDisplay). */
  maskPng: Uint8Array | null = null;
  maskChecksum: string | null = null;
  previewPng: Uint8Array | null = null;

  get currentSeq(): number {
    return this.seq;
  }

  /** Commit a parameter mutation; returns the new sequence number. */
  commit(mutate: (s: UiSession) => void): number {
    mutate(this);
    this.seq += 1;
    return this.seq;
  }

  /** True when a response for `seq` is current and may be displayed. */
  isCurrent(seq: number): boolean {
    return seq === this.seq && seq > this.displayedSeq;
  }

  /**
   * Install a response if it is still current. Returns false for stale
   * responses, which the caller must discard.
   */
  tryDisplay(
    seq: number,
    kind: PreviewKind,
    png: Uint8Array,
    maskChecksum?: string,
  ): boolean {
    if (!this.isCurrent(seq)) return false;
    this.displayedSeq = seq;
    if (kind === "extract") {
      this.maskPng = png;
      this.maskChecksum = maskChecksum ?? null;
    } else {
      this.previewPng = png;
    }
    return true;
  }

  /** Extraction params changed -> re-extract; display params -> apply only. */
  static changeKind(changed: { k?: boolean; s?: boolean; seed?: boolean }): PreviewKind {
    return changed.k || changed.s || changed.seed ? "extract" : "apply";
  }
}

/** Canvas helpers: checkerboard compositing, alpha histograms. */

const CHECKER = 12;

export function drawCheckerboard(ctx: CanvasRenderingContext2D, w: number, h: number): void {
  for (let y = 0; y < h; y += CHECKER) {
    for (let x = 0; x < w; x += CHECKER) {
      ctx.fillStyle = ((x / CHECKER + y / CHECKER) & 1) === 0 ? "#c8c8c8" : "#9a9a9a";
      ctx.fillRect(x, y, CHECKER, CHECKER);
    }
  }
}

export async function drawPngOverCheckerboard(
  canvas: HTMLCanvasElement,
  png: Uint8Array,
): Promise<void> {
  const blob = new Blob([png.buffer.slice(0) as ArrayBuffer], { type: "image/png" });
  const bitmap = await createImageBitmap(blob);
  const ctx = canvas.getContext("2d")!;
  drawCheckerboard(ctx, canvas.width, canvas.height);
  ctx.drawImage(bitmap, 0, 0, canvas.width, canvas.height);
  bitmap.close();
}

export async function drawPng(canvas: HTMLCanvasElement, png: Uint8Array): Promise<void> {
  const blob = new Blob([png.buffer.slice(0) as ArrayBuffer], { type: "image/png" });
  const bitmap = await createImageBitmap(blob);
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(bitmap, 0, 0, canvas.width, canvas.height);
  bitmap.close();
}

/**
 * Histogram of alpha values from interleaved RGBA bytes. Bin 0 holds fully
 * transparent pixels; a mask with any makeup must populate higher bins.
 */
export function alphaHistogram(rgba: Uint8ClampedArray | Uint8Array, bins = 16): number[] {
  const counts = new Array<number>(bins).fill(0);
  for (let i = 3; i < rgba.length; i += 4) {
    const a = rgba[i] / 255;
    const bin = Math.min(bins - 1, Math.floor(a * bins));
    counts[bin] += 1;
  }
  return counts;
}

export function drawHistogram(canvas: HTMLCanvasElement, counts: number[]): void {
  const ctx = canvas.getContext("2d")!;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  // log scale: the zero-alpha bin dwarfs everything else
  const max = Math.max(...counts.map((c) => Math.log1p(c)), 1);
  const bw = width / counts.length;
  ctx.fillStyle = "#4c7ef3";
  counts.forEach((c, i) => {
    const hgt = (Math.log1p(c) / max) * (height - 2);
    ctx.fillRect(i * bw + 1, height - hgt, bw - 2, hgt);
  });
}

export async function pngAlphaBytes(png: Uint8Array): Promise<Uint8ClampedArray> {
  const blob = new Blob([png.buffer.slice(0) as ArrayBuffer], { type: "image/png" });
  const bitmap = await createImageBitmap(blob);
  const canvas = document.createElement("canvas");
  canvas.width = bitmap.width;
  canvas.height = bitmap.height;
  const ctx = canvas.getContext("2d")!;
  ctx.drawImage(bitmap, 0, 0);
  bitmap.close();
  return ctx.getImageData(0, 0, canvas.width, canvas.height).data;
}

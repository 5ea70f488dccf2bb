import { PNG } from "pngjs";

export const PNG_MAGIC = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

export function looksLikePng(body: Buffer): boolean {
  return body.length >= PNG_MAGIC.length && body.subarray(0, PNG_MAGIC.length).equals(PNG_MAGIC);
}

/** Mean Rec.709 luminance of the decoded image, on [0, 1] channel values. */
export function meanLuminance(body: Buffer): number {
  const png = PNG.sync.read(body);
  const { width, height, data } = png; // RGBA, 8-bit per channel
  let sum = 0;
  for (let i = 0; i < width * height; i += 1) {
    const r = data[4 * i] / 255;
    const g = data[4 * i + 1] / 255;
    const b = data[4 * i + 2] / 255;
    sum += 0.2126 * r + 0.7152 * g + 0.0722 * b;
  }
  return sum / (width * height);
}

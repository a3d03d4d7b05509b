// Decoder for the binary 16-bit PGM payloads the render endpoints return.
// Decoding is presentation-only: pixel values are displayed, never recomputed.

export interface PgmImage {
  width: number;
  height: number;
  maxval: number;
  pixels: Uint16Array; // row-major
}

export function base64ToBytes(b64: string): Uint8Array {
  const bin = atob(b64);
  const out = new Uint8Array(bin.length);
  for (let i = 0; i < bin.length; i++) {
    out[i] = bin.charCodeAt(i);
  }
  return out;
}

export function bytesToBase64(bytes: Uint8Array): string {
  let bin = "";
  for (let i = 0; i < bytes.length; i++) {
    bin += String.fromCharCode(bytes[i]);
  }
  return btoa(bin);
}

export function decodePgm(bytes: Uint8Array): PgmImage {
  const header = readHeader(bytes);
  const { width, height, maxval, offset } = header;
  const n = width * height;
  const pixels = new Uint16Array(n);
  if (maxval > 255) {
    if (bytes.length < offset + 2 * n) {
      throw new Error("PGM payload truncated");
    }
    for (let i = 0; i < n; i++) {
      pixels[i] = (bytes[offset + 2 * i] << 8) | bytes[offset + 2 * i + 1];
    }
  } else {
    if (bytes.length < offset + n) {
      throw new Error("PGM payload truncated");
    }
    for (let i = 0; i < n; i++) {
      pixels[i] = bytes[offset + i];
    }
  }
  return { width, height, maxval, pixels };
}

function readHeader(bytes: Uint8Array) {
  // magic, width, height, maxval as whitespace-separated tokens, then one
  // whitespace byte before the raster; '#' starts a comment to end of line
  const tokens: string[] = [];
  let i = 0;
  while (tokens.length < 4 && i < bytes.length) {
    const c = bytes[i];
    if (c === 0x23) { // '#'
      while (i < bytes.length && bytes[i] !== 0x0a) i++;
      i++;
    } else if (isSpace(c)) {
      i++;
    } else {
      let j = i;
      while (j < bytes.length && !isSpace(bytes[j])) j++;
      tokens.push(String.fromCharCode(...bytes.subarray(i, j)));
      i = j;
    }
  }
  if (tokens[0] !== "P5" || tokens.length < 4) {
    throw new Error(`not a binary PGM payload (${tokens[0] ?? "empty"})`);
  }
  const width = parseInt(tokens[1], 10);
  const height = parseInt(tokens[2], 10);
  const maxval = parseInt(tokens[3], 10);
  if (!(width > 0 && height > 0 && maxval > 0 && maxval < 65536)) {
    throw new Error("invalid PGM header");
  }
  return { width, height, maxval, offset: i + 1 };
}

function isSpace(c: number): boolean {
  return c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d;
}

/** Unpack MSB-first packed bits (the DPC valid plane) to one byte per flag. */
export function unpackBits(bytes: Uint8Array, count: number): Uint8Array {
  const out = new Uint8Array(count);
  for (let i = 0; i < count; i++) {
    out[i] = (bytes[i >> 3] >> (7 - (i & 7))) & 1;
  }
  return out;
}

/** Little-endian float32 plane from the DPC values payload. */
export function decodeFloat32(bytes: Uint8Array, count: number): Float32Array {
  if (bytes.length < 4 * count) {
    throw new Error("float32 payload truncated");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, 4 * count);
  const out = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    out[i] = view.getFloat32(4 * i, true);
  }
  return out;
}

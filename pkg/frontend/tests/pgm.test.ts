import { describe, expect, it } from "vitest";
import {
  base64ToBytes, bytesToBase64, decodeFloat32, decodePgm, unpackBits,
} from "../src/pgm.js";

function buildPgm(width: number, height: number, maxval: number,
                  values: number[], comment = ""): Uint8Array {
  const header = `P5${comment}\n${width} ${height}\n${maxval}\n`;
  const headerBytes = new TextEncoder().encode(header);
  const wide = maxval > 255;
  const raster = new Uint8Array(values.length * (wide ? 2 : 1));
  values.forEach((v, i) => {
    if (wide) {
      raster[2 * i] = v >> 8;
      raster[2 * i + 1] = v & 0xff;
    } else {
      raster[i] = v;
    }
  });
  const out = new Uint8Array(headerBytes.length + raster.length);
  out.set(headerBytes);
  out.set(raster, headerBytes.length);
  return out;
}

describe("decodePgm", () => {
  it("decodes 16-bit big-endian rasters", () => {
    const values = [0, 1, 256, 40000, 65535, 12345];
    const img = decodePgm(buildPgm(3, 2, 65535, values));
    expect(img.width).toBe(3);
    expect(img.height).toBe(2);
    expect(img.maxval).toBe(65535);
    expect(Array.from(img.pixels)).toEqual(values);
  });

  it("decodes 8-bit rasters", () => {
    const values = [0, 128, 255, 7];
    const img = decodePgm(buildPgm(2, 2, 255, values));
    expect(Array.from(img.pixels)).toEqual(values);
  });

  it("skips header comments", () => {
    const img = decodePgm(buildPgm(2, 1, 255, [9, 10], "\n# a comment"));
    expect(Array.from(img.pixels)).toEqual([9, 10]);
  });

  it("rejects non-P5 payloads and truncated rasters", () => {
    expect(() => decodePgm(new TextEncoder().encode("P2\n1 1\n255\n0")))
      .toThrow(/not a binary PGM/);
    const truncated = buildPgm(4, 4, 65535, new Array(16).fill(1)).slice(0, 20);
    expect(() => decodePgm(truncated)).toThrow(/truncated/);
  });
});

describe("base64", () => {
  it("round-trips arbitrary bytes", () => {
    const bytes = new Uint8Array(257);
    for (let i = 0; i < bytes.length; i++) {
      bytes[i] = (i * 31) & 0xff;
    }
    expect(base64ToBytes(bytesToBase64(bytes))).toEqual(bytes);
  });
});

describe("unpackBits", () => {
  it("unpacks MSB-first like numpy packbits", () => {
    // 0b10110000 0b01000000 -> 1,0,1,1,0,0,0,0,0,1
    const packed = new Uint8Array([0b10110000, 0b01000000]);
    expect(Array.from(unpackBits(packed, 10)))
      .toEqual([1, 0, 1, 1, 0, 0, 0, 0, 0, 1]);
  });
});

describe("decodeFloat32", () => {
  it("reads little-endian float32 planes", () => {
    const values = [0, -1.5, 2, 0.25];
    const buf = new ArrayBuffer(16);
    const view = new DataView(buf);
    values.forEach((v, i) => view.setFloat32(4 * i, v, true));
    const out = decodeFloat32(new Uint8Array(buf), 4);
    expect(Array.from(out)).toEqual(values);
  });

  it("rejects short payloads", () => {
    expect(() => decodeFloat32(new Uint8Array(7), 2)).toThrow(/truncated/);
  });
});

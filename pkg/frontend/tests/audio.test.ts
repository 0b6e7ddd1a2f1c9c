import { describe, expect, it } from "vitest";
import {
  TARGET_SAMPLE_RATE,
  encodeAudioFrame,
  floatTo16BitPcm,
  mixToMono,
  pcmToBase64,
  resample,
  utf8ToBase64,
} from "../src/audio";

function decodePcm(base64: string): Int16Array {
  // Copy out of Node's shared buffer pool so the view is 2-byte aligned.
  const bytes = Uint8Array.from(Buffer.from(base64, "base64"));
  return new Int16Array(bytes.buffer, 0, bytes.length / 2);
}

describe("sample format helpers", () => {
  it("averages channels into mono", () => {
    const left = new Float32Array([1, 0, -1, 0.5]);
    const right = new Float32Array([0, 0, 1, 0.5]);
    const mono = mixToMono([left, right]);
    expect([...mono]).toEqual([0.5, 0, 0, 0.5]);
    expect(mixToMono([left])).toBe(left);
    expect(mixToMono([]).length).toBe(0);
  });

  it("downsamples 48 kHz to 16 kHz by window averaging", () => {
    const samples = new Float32Array([0, 3, 6, 9, 12, 15, 18, 21, 24]);
    const out = resample(samples, 48000, 16000);
    expect(out.length).toBe(3);
    expect([...out]).toEqual([3, 12, 21]);
  });

  it("upsamples by linear interpolation", () => {
    const samples = new Float32Array([0, 1]);
    const out = resample(samples, 8000, 16000);
    expect(out.length).toBe(4);
    expect(out[0]).toBeCloseTo(0, 6);
    expect(out[1]).toBeCloseTo(0.5, 6);
    expect(out[2]).toBeCloseTo(1, 6);
  });

  it("copies rather than aliases when rates already match", () => {
    const samples = new Float32Array([0.1, 0.2]);
    const out = resample(samples, TARGET_SAMPLE_RATE);
    expect(out).not.toBe(samples);
    expect([...out]).toEqual([...samples]);
  });

  it("rejects nonsense rates", () => {
    expect(() => resample(new Float32Array(4), 0, 16000)).toThrow();
    expect(() => resample(new Float32Array(4), 16000, -1)).toThrow();
  });

  it("maps floats to the full signed 16-bit range with clamping", () => {
    const pcm = floatTo16BitPcm(new Float32Array([0, 1, -1, 2, -2, 0.5]));
    expect([...pcm]).toEqual([0, 32767, -32768, 32767, -32768, Math.round(0.5 * 32767)]);
  });

  it("round-trips PCM through base64", () => {
    const pcm = new Int16Array([0, 1, -1, 32767, -32768, 12345]);
    const decoded = decodePcm(pcmToBase64(pcm));
    expect([...decoded]).toEqual([...pcm]);
  });

  it("handles buffers larger than one base64 chunk", () => {
    const pcm = new Int16Array(20000);
    for (let i = 0; i < pcm.length; i++) {
      pcm[i] = (i * 7919) % 32768;
    }
    const decoded = decodePcm(pcmToBase64(pcm));
    expect(decoded.length).toBe(pcm.length);
    expect(decoded[19999]).toBe(pcm[19999]);
  });

  it("encodes a full capture frame end to end", () => {
    const n = 480;
    const channel = new Float32Array(n).fill(0.25);
    const frame = encodeAudioFrame([channel, channel], 48000);
    const decoded = decodePcm(frame);
    expect(decoded.length).toBe(n / 3);
    for (const value of decoded) {
      expect(value).toBe(Math.round(0.25 * 32767));
    }
  });

  it("encodes typed fallback text as UTF-8 base64", () => {
    expect(utf8ToBase64("hello")).toBe(Buffer.from("hello", "utf8").toString("base64"));
    expect(utf8ToBase64("héllo wörld")).toBe(
      Buffer.from("héllo wörld", "utf8").toString("base64"),
    );
  });
});

/** Microphone capture and the sample-format helpers needed to ship audio
 * over the wire: the server expects base64-encoded 16 kHz mono 16-bit PCM. */

export const TARGET_SAMPLE_RATE = 16000;

export function mixToMono(channels: readonly Float32Array[]): Float32Array {
  if (channels.length === 0) {
    return new Float32Array(0);
  }
  if (channels.length === 1) {
    return channels[0];
  }
  const length = Math.min(...channels.map((c) => c.length));
  const mono = new Float32Array(length);
  for (let i = 0; i < length; i++) {
    let sum = 0;
    for (const channel of channels) {
      sum += channel[i];
    }
    mono[i] = sum / channels.length;
  }
  return mono;
}

/** Rate conversion: window averaging when reducing, linear interpolation
 * when raising. Output length is floor(n * target / source). */
export function resample(
  samples: Float32Array,
  sourceRate: number,
  targetRate = TARGET_SAMPLE_RATE,
): Float32Array {
  if (sourceRate <= 0 || targetRate <= 0) {
    throw new Error("sample rates must be positive");
  }
  if (sourceRate === targetRate) {
    return samples.slice();
  }
  const outLength = Math.floor((samples.length * targetRate) / sourceRate);
  const out = new Float32Array(outLength);
  if (outLength === 0) {
    return out;
  }
  const ratio = sourceRate / targetRate;
  if (ratio > 1) {
    for (let i = 0; i < outLength; i++) {
      const start = Math.floor(i * ratio);
      const end = Math.min(samples.length, Math.max(start + 1, Math.floor((i + 1) * ratio)));
      let sum = 0;
      for (let j = start; j < end; j++) {
        sum += samples[j];
      }
      out[i] = sum / (end - start);
    }
  } else {
    for (let i = 0; i < outLength; i++) {
      const pos = i * ratio;
      const left = Math.floor(pos);
      const right = Math.min(samples.length - 1, left + 1);
      const frac = pos - left;
      out[i] = samples[left] * (1 - frac) + samples[right] * frac;
    }
  }
  return out;
}

export function floatTo16BitPcm(samples: Float32Array): Int16Array {
  const pcm = new Int16Array(samples.length);
  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.max(-1, Math.min(1, samples[i]));
    pcm[i] = clamped < 0 ? Math.round(clamped * 0x8000) : Math.round(clamped * 0x7fff);
  }
  return pcm;
}

export function pcmToBase64(pcm: Int16Array): string {
  const bytes = new Uint8Array(pcm.buffer, pcm.byteOffset, pcm.byteLength);
  let binary = "";
  const chunk = 0x2000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}

/** Full pipeline from raw capture channels to a wire-ready chunk. */
export function encodeAudioFrame(
  channels: readonly Float32Array[],
  sourceRate: number,
): string {
  const mono = mixToMono(channels);
  const resampled = resample(mono, sourceRate);
  return pcmToBase64(floatTo16BitPcm(resampled));
}

/** Typed-text fallback: ships the text itself as a recording frame for
 * setups without a microphone. */
export function utf8ToBase64(text: string): string {
  const bytes = new TextEncoder().encode(text);
  let binary = "";
  for (const byte of bytes) {
    binary += String.fromCharCode(byte);
  }
  return btoa(binary);
}

export type FrameHandler = (base64Chunk: string) => void;

/** Wraps getUserMedia and an audio graph that hands encoded chunks to the
 * caller. Environments without microphone APIs report unsupported so the UI
 * can fall back to typed input. */
export class MicCapture {
  private context: AudioContext | null = null;
  private stream: MediaStream | null = null;
  private processor: ScriptProcessorNode | null = null;
  private source: MediaStreamAudioSourceNode | null = null;

  static isSupported(): boolean {
    return (
      typeof navigator !== "undefined" &&
      !!navigator.mediaDevices?.getUserMedia &&
      typeof AudioContext !== "undefined"
    );
  }

  async start(onFrame: FrameHandler): Promise<void> {
    if (!MicCapture.isSupported()) {
      throw new Error("microphone capture is not available");
    }
    this.stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    this.context = new AudioContext();
    this.source = this.context.createMediaStreamSource(this.stream);
    this.processor = this.context.createScriptProcessor(4096, 1, 1);
    const sourceRate = this.context.sampleRate;
    this.processor.onaudioprocess = (event) => {
      const input = event.inputBuffer.getChannelData(0);
      onFrame(encodeAudioFrame([input], sourceRate));
    };
    this.source.connect(this.processor);
    this.processor.connect(this.context.destination);
  }

  stop(): void {
    this.processor?.disconnect();
    this.source?.disconnect();
    this.stream?.getTracks().forEach((track) => track.stop());
    void this.context?.close();
    this.processor = null;
    this.source = null;
    this.stream = null;
    this.context = null;
  }
}

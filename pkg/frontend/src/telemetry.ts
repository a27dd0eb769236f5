// Fixed-length rolling buffers for the telemetry strips. 600 frames is
// twelve seconds at the 50 Hz frame rate, the same timescale as one
// manual reset.

export const TELEMETRY_LENGTH = 600;

export class RingBuffer {
  private data: number[] = [];

  constructor(readonly capacity: number = TELEMETRY_LENGTH) {}

  push(value: number): void {
    this.data.push(value);
    if (this.data.length > this.capacity) {
      this.data.splice(0, this.data.length - this.capacity);
    }
  }

  values(): readonly number[] {
    return this.data;
  }

  get length(): number {
    return this.data.length;
  }

  last(): number | undefined {
    return this.data[this.data.length - 1];
  }

  clear(): void {
    this.data = [];
  }
}

export interface Telemetry {
  reward: RingBuffer;
  pitch: RingBuffer;
  roll: RingBuffer;
  margin: RingBuffer;
}

export function makeTelemetry(capacity = TELEMETRY_LENGTH): Telemetry {
  return {
    reward: new RingBuffer(capacity),
    pitch: new RingBuffer(capacity),
    roll: new RingBuffer(capacity),
    margin: new RingBuffer(capacity),
  };
}

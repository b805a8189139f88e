// SplitMix64, matching the primary component bit-for-bit so weights and
// datasets regenerate identically on both sides.

const MASK64 = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;
const TWO53 = 9007199254740992; // 2**53

export class SplitMix64 {
  private state: bigint;

  constructor(seed: bigint) {
    if (seed < 0n || seed > MASK64) {
      throw new RangeError(`seed must be an unsigned 64-bit integer, got ${seed}`);
    }
    this.state = seed;
  }

  nextU64(): bigint {
    this.state = (this.state + GAMMA) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * MIX1) & MASK64;
    z = ((z ^ (z >> 27n)) * MIX2) & MASK64;
    return z ^ (z >> 31n);
  }

  /** Uniform in [0, 1): the top 53 bits over 2**53 (exact in a double). */
  nextFloat(): number {
    return Number(this.nextU64() >> 11n) / TWO53;
  }
}

export const wrapU64 = (x: bigint): bigint => x & MASK64;

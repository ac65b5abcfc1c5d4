// Small deterministic PRNG (mulberry32) so randomized cases replay exactly.

export const mulberry32 = (seed: number): (() => number) => {
  let s = seed | 0;
  return () => {
    s = (s + 0x6d2b79f5) | 0;
    let t = Math.imul(s ^ (s >>> 15), 1 | s);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
};

export const randInt = (rng: () => number, maxExclusive: number): number =>
  Math.floor(rng() * maxExclusive);

export const pick = <T>(rng: () => number, items: T[]): T => items[randInt(rng, items.length)];

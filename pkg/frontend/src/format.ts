// Shared number rendering. The subset test regenerates these exact strings
// from the raw payload, so every formatted number on screen is traceable to
// a number the API sent.

export function fmtAmount(x: number): string {
  return x.toLocaleString("en-US", { minimumFractionDigits: 2, maximumFractionDigits: 2 });
}

export function fmtProb(x: number): string {
  return x.toFixed(3);
}

export function fmtPercent(x: number): string {
  return `${(x * 100).toFixed(1)}%`;
}

export function fmtCount(x: number): string {
  return x.toLocaleString("en-US", { maximumFractionDigits: 0 });
}

export function allRenderings(x: number): string[] {
  return [fmtAmount(x), fmtProb(x), fmtPercent(x), fmtCount(x), String(x)];
}

/** Minimal SVG plotting: axes, polylines and bar groups, no dependencies. */

export interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export function xPix(f: Frame, x: number): number {
  return f.left + ((x - f.xMin) / (f.xMax - f.xMin || 1)) * (f.width - f.left - f.right);
}

export function yPix(f: Frame, y: number): number {
  return f.height - f.bottom - ((y - f.yMin) / (f.yMax - f.yMin || 1)) * (f.height - f.top - f.bottom);
}

const fmt = (x: number): string => {
  const a = Math.abs(x);
  if (a !== 0 && (a >= 1e5 || a < 1e-3)) return x.toExponential(1);
  return Number(x.toPrecision(4)).toString();
};

function ticks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const raw = span / n;
  const mag = 10 ** Math.floor(Math.log10(raw));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= n + 1) ?? mag * 10;
  const out: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12; t += step) out.push(t);
  return out;
}

export function axes(f: Frame, xLabel: string, yLabel: string, title: string): string {
  const parts: string[] = [];
  const x0 = f.left;
  const x1 = f.width - f.right;
  const y0 = f.height - f.bottom;
  const y1 = f.top;
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`);
  for (const t of ticks(f.xMin, f.xMax)) {
    const px = xPix(f, t);
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="#333"/>`);
    parts.push(`<text x="${px}" y="${y0 + 16}" font-size="10" text-anchor="middle">${fmt(t)}</text>`);
  }
  for (const t of ticks(f.yMin, f.yMax)) {
    const py = yPix(f, t);
    parts.push(`<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`);
    parts.push(`<text x="${x0 - 6}" y="${py + 3}" font-size="10" text-anchor="end">${fmt(t)}</text>`);
    parts.push(`<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" stroke="#eee"/>`);
  }
  parts.push(`<text x="${(x0 + x1) / 2}" y="${f.height - 4}" font-size="11" text-anchor="middle">${xLabel}</text>`);
  parts.push(`<text x="12" y="${(y0 + y1) / 2}" font-size="11" text-anchor="middle" transform="rotate(-90 12 ${(y0 + y1) / 2})">${yLabel}</text>`);
  parts.push(`<text x="${(x0 + x1) / 2}" y="14" font-size="13" font-weight="bold" text-anchor="middle">${title}</text>`);
  return parts.join("\n");
}

export function polyline(f: Frame, xs: number[], ys: number[], color: string,
                         dashed = false): string {
  const pts = xs.map((x, i) => `${xPix(f, x).toFixed(2)},${yPix(f, ys[i]).toFixed(2)}`).join(" ");
  const dash = dashed ? ` stroke-dasharray="6 4"` : "";
  return `<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="1.5"${dash}/>`;
}

export function legend(f: Frame, entries: { label: string; color: string; dashed?: boolean }[]): string {
  const parts: string[] = [];
  let y = f.top + 8;
  const x = f.width - f.right - 150;
  for (const e of entries) {
    const dash = e.dashed ? ` stroke-dasharray="6 4"` : "";
    parts.push(`<line x1="${x}" y1="${y}" x2="${x + 24}" y2="${y}" stroke="${e.color}" stroke-width="1.5"${dash}/>`);
    parts.push(`<text x="${x + 30}" y="${y + 3}" font-size="10">${e.label}</text>`);
    y += 14;
  }
  return parts.join("\n");
}

export function document(width: number, height: number, body: string): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">
<rect width="${width}" height="${height}" fill="white"/>
${body}
</svg>
`;
}

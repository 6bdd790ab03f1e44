/**
 * Hand-built static SVG line charts with standard-deviation error bars.
 *
 * No charting dependency: the output must be a deterministic static
 * image file, so every coordinate is computed here and formatted with
 * fixed precision.  A chart is one or more series of (x, y ± err)
 * points sharing an axis pair.
 */

export interface SeriesPoint {
  x: number;
  y: number;
  /** Half-height of the error bar (standard deviation); 0 draws caps only. */
  err: number;
}

export interface Series {
  label: string;
  points: SeriesPoint[];
}

export interface ChartOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  width?: number;
  height?: number;
}

const PALETTE = [
  "#2563eb", "#dc2626", "#16a34a", "#9333ea",
  "#ea580c", "#0891b2", "#4d7c0f", "#be185d",
];

const MARGIN = { top: 44, right: 24, bottom: 48, left: 72 };

function fmt(v: number): string {
  return v.toFixed(2).replace(/\.00$/, "").replace(/(\.\d)0$/, "$1");
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Tick values: 0 to max in round steps (1/2/5 x 10^k). */
function ticks(max: number, count: number): number[] {
  if (max <= 0) return [0, 1];
  const rough = max / count;
  const power = Math.pow(10, Math.floor(Math.log10(rough)));
  const step =
    [1, 2, 5, 10].map((s) => s * power).find((s) => s >= rough) ?? 10 * power;
  const out: number[] = [];
  for (let v = 0; v <= max + step / 2; v += step) out.push(v);
  return out;
}

function tickLabel(v: number): string {
  if (v >= 1_000_000) return `${fmt(v / 1_000_000)}M`;
  if (v >= 1_000) return `${fmt(v / 1_000)}k`;
  return fmt(v);
}

export function renderChart(series: Series[], options: ChartOptions): string {
  const width = options.width ?? 720;
  const height = options.height ?? 420;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="24" text-anchor="middle" font-size="16" ` +
      `font-weight="bold">${esc(options.title)}</text>`,
  );

  const points = series.flatMap((s) => s.points);
  if (points.length === 0) {
    parts.push(
      `<text x="${width / 2}" y="${height / 2}" text-anchor="middle" ` +
        `font-size="14" fill="#6b7280">no data</text>`,
    );
    parts.push("</svg>");
    return parts.join("\n") + "\n";
  }

  const xValues = [...new Set(points.map((p) => p.x))].sort((a, b) => a - b);
  const xMin = xValues[0]!;
  const xMax = xValues[xValues.length - 1]!;
  const xSpan = xMax > xMin ? xMax - xMin : 1;
  const yMax = Math.max(...points.map((p) => p.y + p.err), 1e-9);
  const yTicks = ticks(yMax, 5);
  const yTop = yTicks[yTicks.length - 1]!;

  const sx = (x: number): number =>
    MARGIN.left + ((x - xMin) / xSpan) * (xMax > xMin ? plotW : 0) +
    (xMax > xMin ? 0 : plotW / 2);
  const sy = (y: number): number => MARGIN.top + plotH * (1 - y / yTop);

  // Axes and gridlines.
  for (const t of yTicks) {
    const y = fmt(sy(t));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${width - MARGIN.right}" ` +
        `y2="${y}" stroke="#e5e7eb"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${y}" text-anchor="end" ` +
        `dominant-baseline="middle" font-size="11">${tickLabel(t)}</text>`,
    );
  }
  for (const x of xValues) {
    const px = fmt(sx(x));
    parts.push(
      `<line x1="${px}" y1="${MARGIN.top + plotH}" x2="${px}" ` +
        `y2="${MARGIN.top + plotH + 5}" stroke="#374151"/>`,
    );
    parts.push(
      `<text x="${px}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" ` +
        `font-size="11">${fmt(x)}</text>`,
    );
  }
  parts.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" ` +
      `y2="${MARGIN.top + plotH}" stroke="#374151"/>`,
  );
  parts.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top + plotH}" ` +
      `x2="${width - MARGIN.right}" y2="${MARGIN.top + plotH}" stroke="#374151"/>`,
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 10}" ` +
      `text-anchor="middle" font-size="12">${esc(options.xLabel)}</text>`,
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
      `font-size="12" transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">` +
      `${esc(options.yLabel)}</text>`,
  );

  // Series: line, error bars, markers.
  series.forEach((s, index) => {
    const color = PALETTE[index % PALETTE.length]!;
    const pts = [...s.points].sort((a, b) => a.x - b.x);
    if (pts.length > 1) {
      const path = pts.map((p) => `${fmt(sx(p.x))},${fmt(sy(p.y))}`).join(" ");
      parts.push(
        `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="2"/>`,
      );
    }
    for (const p of pts) {
      const px = fmt(sx(p.x));
      const yLo = fmt(sy(Math.max(p.y - p.err, 0)));
      const yHi = fmt(sy(p.y + p.err));
      parts.push(
        `<line x1="${px}" y1="${yLo}" x2="${px}" y2="${yHi}" ` +
          `stroke="${color}" stroke-width="1"/>`,
      );
      for (const cap of [yLo, yHi]) {
        parts.push(
          `<line x1="${fmt(sx(p.x) - 4)}" y1="${cap}" ` +
            `x2="${fmt(sx(p.x) + 4)}" y2="${cap}" stroke="${color}" stroke-width="1"/>`,
        );
      }
      parts.push(
        `<circle cx="${px}" cy="${fmt(sy(p.y))}" r="3.5" fill="${color}"/>`,
      );
    }
  });

  // Legend.
  series.forEach((s, index) => {
    const color = PALETTE[index % PALETTE.length]!;
    const y = MARGIN.top + 6 + index * 18;
    const x = width - MARGIN.right - 180;
    parts.push(
      `<line x1="${x}" y1="${y}" x2="${x + 22}" y2="${y}" ` +
        `stroke="${color}" stroke-width="2"/>`,
    );
    parts.push(
      `<circle cx="${x + 11}" cy="${y}" r="3" fill="${color}"/>`,
    );
    parts.push(
      `<text x="${x + 28}" y="${y}" dominant-baseline="middle" ` +
        `font-size="11">${esc(s.label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

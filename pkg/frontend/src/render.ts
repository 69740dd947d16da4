import { existsSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { basename, dirname, join } from "node:path";
import { createRequire } from "node:module";

// echarts publishes CommonJS-flavored type declarations; load it through
// require so the same code works under NodeNext ESM resolution
const echarts = createRequire(import.meta.url)("echarts") as typeof import("echarts");

import { column, readTable, type Table } from "./csv.js";
import { expandGlob } from "./glob.js";
import type { PlotSpec } from "./spec.js";

/** Figure convention: heavy opaque strokes for averaged estimators, thin
 *  translucent strokes for the raw iterate. */
const STYLE = {
  dark: { width: 2.4, opacity: 1.0, colors: ["#16337a", "#7a1616", "#0e5c35", "#5b1678"] },
  light: { width: 1.0, opacity: 0.45, colors: ["#7d97d6", "#d69a7d", "#7dc4a0", "#b78bd0"] },
} as const;

function seedLabel(path: string): string {
  const m = basename(path).match(/seed[_-]?(\d+)/);
  return m ? `seed ${m[1]}` : basename(path).replace(/\.csv$/, "");
}

function manifestSubtitle(dir: string): string {
  const path = join(dir, "manifest.json");
  if (!existsSync(path)) return "";
  try {
    const resolved = JSON.parse(readFileSync(path, "utf8")).resolved ?? {};
    const parts = [
      resolved.problem,
      resolved.link_kind ?? (resolved.k_star !== undefined ? `k=${resolved.k_star}` : undefined),
      resolved.d !== undefined ? `d=${resolved.d}` : undefined,
      resolved.n !== undefined ? `n=${resolved.n}` : undefined,
      resolved.epsilon !== undefined ? `eps=${Number(resolved.epsilon).toPrecision(3)}` : undefined,
    ].filter((p) => p !== undefined);
    return parts.join("  ");
  } catch {
    return "";
  }
}

function buildSeries(tables: Table[], spec: PlotSpec) {
  const series: object[] = [];
  for (const pair of spec.metric_pairs) {
    const sty = STYLE[pair.style];
    tables.forEach((table, i) => {
      const t = column(table, "time");
      const v = column(table, pair.column);
      let points = t.map((x, j) => [x, v[j]] as [number, number]);
      if (spec.log_x) points = points.filter(([x]) => x > 0);
      series.push({
        type: "line",
        name: `${pair.column} (${seedLabel(table.path)})`,
        showSymbol: false,
        data: points,
        lineStyle: {
          width: sty.width,
          opacity: sty.opacity,
          color: sty.colors[i % sty.colors.length],
        },
        itemStyle: { color: sty.colors[i % sty.colors.length] },
        emphasis: { disabled: true },
        animation: false,
      });
    });
  }
  return series;
}

/** echarts derives CSS class and clip-path id prefixes from a
 *  process-global instance counter; all ids inside one SVG share the same
 *  prefix, so rewriting `zr<N>-` to `zr-` keeps references consistent and
 *  makes repeated renders of the same spec byte-identical. */
export function stabilizeIds(svg: string): string {
  const out = svg.replace(/zr\d+-/g, "zr-");
  const mapping = new Map<string, string>();
  return out.replace(/zr-cls-\d+/g, (name) => {
    if (!mapping.has(name)) {
      mapping.set(name, `zr-cls-${mapping.size}`);
    }
    return mapping.get(name)!;
  });
}

/** Render the spec to an SVG file; returns the output path. */
export function render(spec: PlotSpec): string {
  const files = expandGlob(spec.input_glob);
  if (files.length === 0) {
    throw new Error(`no CSV files match '${spec.input_glob}'`);
  }
  const tables = files.map(readTable);
  // validate every referenced column before any output is written
  for (const table of tables) {
    column(table, "time");
    for (const pair of spec.metric_pairs) column(table, pair.column);
  }
  const chart = echarts.init(null, null, { renderer: "svg", ssr: true, width: 920, height: 560 });
  chart.setOption({
    animation: false,
    title: {
      text: spec.metric_pairs.map((p) => `${p.column} (${p.style})`).join("  vs  "),
      subtext: manifestSubtitle(dirname(files[0])),
      left: "center",
    },
    grid: { left: 70, right: 30, top: 80, bottom: 55 },
    xAxis: {
      type: spec.log_x ? "log" : "value",
      name: "time",
      nameLocation: "middle",
      nameGap: 30,
    },
    yAxis: { type: "value", name: "correlation" },
    series: buildSeries(tables, spec),
  });
  const svg = stabilizeIds(chart.renderToSVGString());
  chart.dispose();
  mkdirSync(dirname(spec.output) || ".", { recursive: true });
  writeFileSync(spec.output, svg);
  return spec.output;
}

import { readFileSync } from "node:fs";
import { z } from "zod";

/** One curve selection: a CSV column plus its drawing weight. */
export const MetricPair = z.object({
  column: z.string().min(1),
  style: z.enum(["dark", "light"]),
});

/** A batch plot job: which CSVs, which columns, where the image goes. */
export const PlotSpecSchema = z.object({
  input_glob: z.string().min(1),
  metric_pairs: z.array(MetricPair).min(1),
  output: z.string().min(1),
  log_x: z.boolean().default(false),
});

export type PlotSpec = z.infer<typeof PlotSpecSchema>;
export type MetricPairT = z.infer<typeof MetricPair>;

export function loadSpec(path: string): PlotSpec {
  let raw: string;
  try {
    raw = readFileSync(path, "utf8");
  } catch (err) {
    throw new Error(`cannot read plot spec ${path}: ${(err as Error).message}`);
  }
  const parsed = PlotSpecSchema.safeParse(JSON.parse(raw));
  if (!parsed.success) {
    const issue = parsed.error.issues[0];
    throw new Error(`invalid plot spec: ${issue.path.join(".")}: ${issue.message}`);
  }
  return parsed.data;
}

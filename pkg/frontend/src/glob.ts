import { readdirSync, statSync } from "node:fs";
import { join, dirname, basename } from "node:path";

/**
 * Minimal glob over one directory: the pattern's directory part is taken
 * literally and only the basename may contain `*` / `?` wildcards, which
 * is all the runner's outputs need (e.g. `runs/odd/seed_*.csv`).
 * Matches are returned sorted for deterministic figure composition.
 */
export function expandGlob(pattern: string): string[] {
  const dir = dirname(pattern);
  const base = basename(pattern);
  if (!/[*?]/.test(base)) {
    try {
      statSync(pattern);
      return [pattern];
    } catch {
      return [];
    }
  }
  const rx = new RegExp(
    "^" + base.replace(/[.+^${}()|[\]\\]/g, "\\$&").replace(/\*/g, "[^/]*").replace(/\?/g, ".") + "$",
  );
  let names: string[];
  try {
    names = readdirSync(dir);
  } catch {
    return [];
  }
  return names
    .filter((n) => rx.test(n))
    .sort()
    .map((n) => join(dir, n));
}

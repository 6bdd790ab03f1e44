/**
 * Parsing and validation for the bench CSV schemas.
 *
 * Two row shapes exist, identified by their exact header line: the
 * fetch-and-add bench (`FAA_COLUMNS`) and the segment-queue bench
 * (`QUEUE_COLUMNS`).  Every validation failure carries the file and
 * 1-based line number it was found on.
 */

export const FAA_COLUMNS = [
  "impl", "m", "d", "threads", "ratio_pct", "work_cycles", "rep",
  "duration_s", "total_ops", "throughput", "avg_batch", "fairness",
  "hp_throughput", "lp_throughput",
] as const;

export const QUEUE_COLUMNS = [
  "queue_impl", "idx_impl", "m", "threads", "pattern", "initial_size",
  "work_cycles", "rep", "duration_s", "total_ops", "throughput",
] as const;

export class SchemaError extends Error {
  readonly file: string;
  readonly line: number;

  constructor(file: string, line: number, detail: string) {
    super(`${file}:${line}: ${detail}`);
    this.name = "SchemaError";
    this.file = file;
    this.line = line;
  }
}

export interface FaaRow {
  impl: string;
  m: number;
  d: number;
  threads: number;
  ratioPct: number;
  workCycles: number;
  rep: number;
  durationS: number;
  totalOps: number;
  throughput: number;
  avgBatch: number;
  fairness: number;
  hpThroughput: number;
  lpThroughput: number;
}

export interface QueueRow {
  queueImpl: string;
  idxImpl: string;
  m: number;
  threads: number;
  pattern: string;
  initialSize: number;
  workCycles: number;
  rep: number;
  durationS: number;
  totalOps: number;
  throughput: number;
}

export type ParsedCsv =
  | { kind: "faa"; rows: FaaRow[] }
  | { kind: "queue"; rows: QueueRow[] };

const FAA_STRING_COLUMNS = new Set(["impl"]);
const QUEUE_STRING_COLUMNS = new Set(["queue_impl", "idx_impl", "pattern"]);

function splitLine(line: string): string[] {
  return line.split(",");
}

function parseNumber(
  file: string,
  line: number,
  column: string,
  cell: string,
): number {
  const value = Number(cell);
  if (cell.trim() === "" || !Number.isFinite(value)) {
    throw new SchemaError(
      file, line,
      `column "${column}" expects a number, got ${JSON.stringify(cell)}`,
    );
  }
  return value;
}

function parseRows(
  file: string,
  lines: string[],
  columns: readonly string[],
  stringColumns: Set<string>,
): Record<string, string | number>[] {
  const rows: Record<string, string | number>[] = [];
  for (let i = 1; i < lines.length; i++) {
    const raw = lines[i]!;
    if (raw === "") continue; // trailing newline
    const lineNo = i + 1;
    const cells = splitLine(raw);
    if (cells.length !== columns.length) {
      throw new SchemaError(
        file, lineNo,
        `expected ${columns.length} columns, got ${cells.length}`,
      );
    }
    const row: Record<string, string | number> = {};
    for (let j = 0; j < columns.length; j++) {
      const column = columns[j]!;
      const cell = cells[j]!;
      row[column] = stringColumns.has(column)
        ? cell
        : parseNumber(file, lineNo, column, cell);
    }
    rows.push(row);
  }
  if (rows.length === 0) {
    throw new SchemaError(file, 1, "CSV contains no data rows");
  }
  return rows;
}

/** Parse one CSV file's text, sniffing the schema from its header line. */
export function parseCsv(file: string, text: string): ParsedCsv {
  const lines = text.split(/\r?\n/);
  const header = lines[0] ?? "";
  if (header === "") {
    throw new SchemaError(file, 1, "CSV is empty");
  }
  if (header === FAA_COLUMNS.join(",")) {
    const rows = parseRows(file, lines, FAA_COLUMNS, FAA_STRING_COLUMNS);
    return {
      kind: "faa",
      rows: rows.map((row) => ({
        impl: row.impl as string,
        m: row.m as number,
        d: row.d as number,
        threads: row.threads as number,
        ratioPct: row.ratio_pct as number,
        workCycles: row.work_cycles as number,
        rep: row.rep as number,
        durationS: row.duration_s as number,
        totalOps: row.total_ops as number,
        throughput: row.throughput as number,
        avgBatch: row.avg_batch as number,
        fairness: row.fairness as number,
        hpThroughput: row.hp_throughput as number,
        lpThroughput: row.lp_throughput as number,
      })),
    };
  }
  if (header === QUEUE_COLUMNS.join(",")) {
    const rows = parseRows(file, lines, QUEUE_COLUMNS, QUEUE_STRING_COLUMNS);
    return {
      kind: "queue",
      rows: rows.map((row) => ({
        queueImpl: row.queue_impl as string,
        idxImpl: row.idx_impl as string,
        m: row.m as number,
        threads: row.threads as number,
        pattern: row.pattern as string,
        initialSize: row.initial_size as number,
        workCycles: row.work_cycles as number,
        rep: row.rep as number,
        durationS: row.duration_s as number,
        totalOps: row.total_ops as number,
        throughput: row.throughput as number,
      })),
    };
  }
  throw new SchemaError(
    file, 1,
    `unrecognized header; expected "${FAA_COLUMNS.join(",")}" or "${QUEUE_COLUMNS.join(",")}"`,
  );
}

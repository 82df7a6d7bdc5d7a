/** RFC 4180 parser: quoted fields, doubled-quote escapes, LF or CRLF rows. */
export function parseCsv(text: string): string[][] {
  const rows: string[][] = [];
  let row: string[] = [];
  let field = "";
  let quoted = false;
  let i = 0;
  while (i < text.length) {
    const ch = text[i]!;
    if (quoted) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i += 2;
        } else {
          quoted = false;
          i += 1;
        }
      } else {
        field += ch;
        i += 1;
      }
      continue;
    }
    if (ch === '"' && field === "") {
      quoted = true;
      i += 1;
    } else if (ch === ",") {
      row.push(field);
      field = "";
      i += 1;
    } else if (ch === "\n" || ch === "\r") {
      row.push(field);
      rows.push(row);
      row = [];
      field = "";
      i += ch === "\r" && text[i + 1] === "\n" ? 2 : 1;
    } else {
      field += ch;
      i += 1;
    }
  }
  if (quoted) throw new Error("unterminated quoted field");
  if (field !== "" || row.length > 0) {
    row.push(field);
    rows.push(row);
  }
  return rows;
}

export const REPORT_HEADER = [
  "patient",
  "scan",
  "organ",
  "pair",
  "surface_dsc",
  "tau_mm",
  "tau_quantized_mm",
  "volumetric_dsc",
  "overlap_area_1_mm2",
  "overlap_area_2_mm2",
  "total_area_1_mm2",
  "total_area_2_mm2",
  "volume_1_mm3",
  "volume_2_mm3",
  "flags",
] as const;

export const AGGREGATE_ORGAN = "AGGREGATE";

export interface ReportRow {
  patient: string;
  scan: string;
  organ: string;
  pair: string;
  surfaceDsc: number | null;
  tauMm: number | null;
  tauQuantizedMm: number | null;
  volumetricDsc: number | null;
  overlapArea1Mm2: number | null;
  overlapArea2Mm2: number | null;
  totalArea1Mm2: number | null;
  totalArea2Mm2: number | null;
  volume1Mm3: number | null;
  volume2Mm3: number | null;
  flags: string[];
}

export interface ParsedReport {
  rows: ReportRow[];
  aggregates: ReportRow[];
}

// Cells are Python repr strings: shortest round-trip decimal, so Number()
// recovers the identical float64. "-" is a missing value, "inf" overflow.
function numberCell(cell: string, where: string): number | null {
  if (cell === "-") return null;
  if (cell === "inf") return Infinity;
  const v = Number(cell);
  if (cell === "" || Number.isNaN(v)) {
    throw new Error(`${where}: not a number: ${JSON.stringify(cell)}`);
  }
  return v;
}

export function parseReportCsv(text: string): ParsedReport {
  const records = parseCsv(text);
  if (records.length === 0) throw new Error("empty report");
  const header = records[0]!;
  if (header.join(",") !== REPORT_HEADER.join(",")) {
    throw new Error(`unexpected report header: ${header.join(",")}`);
  }
  const rows: ReportRow[] = [];
  const aggregates: ReportRow[] = [];
  for (let r = 1; r < records.length; r++) {
    const rec = records[r]!;
    if (rec.length !== REPORT_HEADER.length) {
      throw new Error(`row ${r + 1}: expected ${REPORT_HEADER.length} cells, got ${rec.length}`);
    }
    const where = `row ${r + 1}`;
    const row: ReportRow = {
      patient: rec[0]!,
      scan: rec[1]!,
      organ: rec[2]!,
      pair: rec[3]!,
      surfaceDsc: numberCell(rec[4]!, where),
      tauMm: numberCell(rec[5]!, where),
      tauQuantizedMm: numberCell(rec[6]!, where),
      volumetricDsc: numberCell(rec[7]!, where),
      overlapArea1Mm2: numberCell(rec[8]!, where),
      overlapArea2Mm2: numberCell(rec[9]!, where),
      totalArea1Mm2: numberCell(rec[10]!, where),
      totalArea2Mm2: numberCell(rec[11]!, where),
      volume1Mm3: numberCell(rec[12]!, where),
      volume2Mm3: numberCell(rec[13]!, where),
      flags: rec[14] === "" ? [] : rec[14]!.split(";"),
    };
    (row.organ === AGGREGATE_ORGAN ? aggregates : rows).push(row);
  }
  return { rows, aggregates };
}

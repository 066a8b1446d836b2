import { readFileSync } from 'node:fs'
import Papa from 'papaparse'

export class MissingColumn extends Error {}
export class EmptyData extends Error {}

export interface Table {
  header: string[]
  rows: Record<string, number>[]
}

export function readCsv(path: string): Table {
  const text = readFileSync(path, 'utf8')
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
    delimiter: ',',
  })
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]
    throw new Error(`${path}: ${first.message} (row ${first.row})`)
  }
  const header = parsed.meta.fields ?? []
  if (header.length === 0 || parsed.data.length === 0) {
    throw new EmptyData(`${path} contains no data rows`)
  }
  const rows = parsed.data.map((raw) =>
    Object.fromEntries(header.map((h) => [h, Number(raw[h])])),
  )
  return { header, rows }
}

export function requireColumns(table: Table, columns: string[], path: string): void {
  for (const column of columns) {
    if (!table.header.includes(column)) {
      throw new MissingColumn(`${path} is missing column '${column}'`)
    }
  }
}

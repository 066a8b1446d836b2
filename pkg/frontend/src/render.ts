import { writeFileSync } from 'node:fs'
import { parseArgs } from 'node:util'
import { EmptyData, MissingColumn, readCsv } from './csv.js'
import type { FigureSpec } from './figure.js'
import { renderFigure } from './figure.js'

export function renderToFile(spec: FigureSpec, csvPath: string, outPath: string): void {
  const table = readCsv(csvPath)
  const svg = renderFigure(spec, table, csvPath)
  writeFileSync(outPath, svg + '\n')
}

/** Shared entry point of the four figure scripts: --csv PATH --out PATH. */
export function runFigureScript(spec: FigureSpec, argv = process.argv.slice(2)): number {
  let args
  try {
    args = parseArgs({
      args: argv,
      options: {
        csv: { type: 'string' },
        out: { type: 'string' },
      },
    })
  } catch (err) {
    process.stderr.write(JSON.stringify({ error: 'BadArguments', message: String(err) }) + '\n')
    return 2
  }
  const csv = args.values.csv
  const out = args.values.out ?? `${spec.name}.svg`
  if (!csv) {
    process.stderr.write(
      JSON.stringify({ error: 'BadArguments', message: '--csv is required' }) + '\n',
    )
    return 2
  }
  try {
    renderToFile(spec, csv, out)
    process.stdout.write(out + '\n')
    return 0
  } catch (err) {
    const kind =
      err instanceof MissingColumn
        ? 'MissingColumn'
        : err instanceof EmptyData
          ? 'EmptyData'
          : 'RenderError'
    process.stderr.write(
      JSON.stringify({ error: kind, message: err instanceof Error ? err.message : String(err) }) +
        '\n',
    )
    return 1
  }
}

import { createHash } from 'node:crypto'
import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { beforeAll, describe, expect, it } from 'vitest'
import { EmptyData, MissingColumn, readCsv } from '../src/csv.js'
import { mappedColumns, renderFigure } from '../src/figure.js'
import { renderToFile, runFigureScript } from '../src/render.js'
import { ALL_SPECS, FIG1, FIG3, FIG4 } from '../src/specs.js'

let dir: string

function sha256(path: string): string {
  return createHash('sha256').update(readFileSync(path)).digest('hex')
}

function writeFixture(name: string, header: string[], rows: number[][]): string {
  const path = join(dir, `${name}.csv`)
  const lines = [header.join(',')]
  for (const row of rows) lines.push(row.map((v) => v.toString()).join(','))
  writeFileSync(path, lines.join('\n') + '\n')
  return path
}

/** Plausible synthetic rows mirroring the primary component's CSV schemas. */
function fixtureFor(name: string): string {
  const n = 40
  if (name === 'fig1' || name === 'fig2') {
    const header = ['phi', 'u_norm', 'p_norm', 'theta_u_r', 'theta_u_c', 'theta_p_r', 'theta_p_c']
    if (name === 'fig2') header.splice(6, 0, 'theta_p_r2')
    const rows = Array.from({ length: n }, (_, k) => {
      const phi = (k / (n - 1)) * Math.PI
      const u = Math.abs(Math.sin(phi)) * 100 + 10
      const p = Math.abs(Math.cos(phi)) * 900 + 30
      const base = [phi, u, p, u * 1.2, u * 2.5, p * 1.4]
      if (name === 'fig2') base.push(p * 1.1)
      base.push(p * 3)
      return base
    })
    return writeFixture(name, header, rows)
  }
  if (name === 'fig3') {
    const header = [
      'lam', 'u_norm_TH', 'u_norm_SV', 'p_norm_TH', 'p_norm_SV',
      'div_u_TH', 'div_u_SV', 'theta_u_c', 'theta_u_r', 'theta_p_c', 'theta_p_r',
    ]
    const rows = Array.from({ length: n }, (_, k) => {
      const lam = k / (n - 1)
      const uSv = lam * 0.057 // zero at lam = 0: exercises log-axis pen-up
      return [lam, 1.5 - lam, uSv, 0.28 * (1 - lam) + 1e-6, 0.28 * (1 - lam) + 1e-6,
        1.4, 1e-15, 194 * (1 - lam) + 0.05, lam * 0.0572, 0.5, 0.74 * (1 - lam) + 1e-9]
    })
    return writeFixture(name, header, rows)
  }
  const header = ['t', 'err_TH', 'err_SV', 'p_norm_TH', 'p_norm_SV']
  const rows = Array.from({ length: n }, (_, k) => {
    const t = k * 0.025
    return [t, 1e-4 * Math.exp(3 * t), 1e-15, 17.8, 17.8]
  })
  return writeFixture('fig4', header, rows)
}

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), 'saddlelab-figs-'))
})

describe('csv reading', () => {
  it('parses numeric tables', () => {
    const path = fixtureFor('fig4')
    const table = readCsv(path)
    expect(table.header[0]).toBe('t')
    expect(table.rows.length).toBe(40)
    expect(table.rows[1].t).toBeCloseTo(0.025)
  })

  it('raises EmptyData for a header-only file', () => {
    const path = join(dir, 'empty.csv')
    writeFileSync(path, 'a,b\n')
    expect(() => readCsv(path)).toThrow(EmptyData)
  })
})

describe('figure rendering', () => {
  for (const name of Object.keys(ALL_SPECS)) {
    it(`renders ${name} with every mapped column and leaves the CSV unchanged`, () => {
      const spec = ALL_SPECS[name]
      const csvPath = fixtureFor(name)
      const before = sha256(csvPath)
      const outPath = join(dir, `${name}.svg`)
      renderToFile(spec, csvPath, outPath)
      const svg = readFileSync(outPath, 'utf8')
      expect(svg.startsWith('<svg')).toBe(true)
      for (const column of mappedColumns(spec)) {
        if (column === spec.xColumn) continue
        expect(svg).toContain(`data-column="${column}"`)
      }
      expect(sha256(csvPath)).toBe(before)
    })
  }

  it('lays fig1 out as two side-by-side panels', () => {
    const table = readCsv(fixtureFor('fig1'))
    const svg = renderFigure(FIG1, table)
    expect(svg).toContain('velocity part')
    expect(svg).toContain('multiplier part')
    expect(svg).toContain('width="920"')
  })

  it('uses a log axis for fig4 and drops nonpositive values', () => {
    const table = readCsv(fixtureFor('fig4'))
    const svg = renderFigure(FIG4, table)
    // the SV error is 1e-15 everywhere: still drawn, on a log axis
    expect(svg).toContain('data-column="err_SV"')
    expect(svg).toMatch(/1e-\d+/)
  })

  it('skips the zero at lambda=0 on the fig3 log panel', () => {
    const table = readCsv(fixtureFor('fig3'))
    const svg = renderFigure(FIG3, table)
    const path = svg.match(/data-column="u_norm_SV" d="([^"]+)"/)
    expect(path).not.toBeNull()
    // first drawable point is lambda > 0: exactly one pen-down segment
    expect(path![1].startsWith('M')).toBe(true)
  })

  it('rejects a CSV with a missing mapped column', () => {
    const header = ['phi', 'u_norm']
    const path = writeFixture('broken', header, [[0, 1], [1, 2]])
    const table = readCsv(path)
    expect(() => renderFigure(FIG1, table, path)).toThrow(MissingColumn)
  })
})

describe('figure scripts', () => {
  it('runs end to end via argv', () => {
    const csvPath = fixtureFor('fig1')
    const outPath = join(dir, 'cli-fig1.svg')
    const code = runFigureScript(FIG1, ['--csv', csvPath, '--out', outPath])
    expect(code).toBe(0)
    expect(readFileSync(outPath, 'utf8')).toContain('<svg')
  })

  it('fails with exit code 2 without --csv', () => {
    expect(runFigureScript(FIG1, [])).toBe(2)
  })

  it('fails with exit code 1 on a broken input', () => {
    const path = writeFixture('broken2', ['phi'], [[0], [1]])
    expect(runFigureScript(FIG1, ['--csv', path, '--out', join(dir, 'x.svg')])).toBe(1)
  })
})

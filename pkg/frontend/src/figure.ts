import { scaleLinear, scaleLog } from 'd3-scale'
import type { Table } from './csv.js'
import { EmptyData, MissingColumn } from './csv.js'

export interface CurveSpec {
  column: string
  label: string
  color: string
  dash?: string
}

export interface PanelSpec {
  title: string
  yLabel: string
  yLog: boolean
  curves: CurveSpec[]
}

export interface FigureSpec {
  name: string
  xColumn: string
  xLabel: string
  panels: PanelSpec[]
}

const PANEL_WIDTH = 460
const PANEL_HEIGHT = 360
const MARGIN = { left: 70, right: 18, top: 34, bottom: 50 }

function esc(text: string): string {
  return text
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
}

function tickFormat(value: number): string {
  if (value === 0) return '0'
  const magnitude = Math.abs(value)
  if (magnitude >= 1e4 || magnitude < 1e-3) {
    return value.toExponential(0).replace('+', '')
  }
  return Number(value.toPrecision(4)).toString()
}

export function mappedColumns(spec: FigureSpec): string[] {
  const columns = new Set<string>([spec.xColumn])
  for (const panel of spec.panels) {
    for (const curve of panel.curves) columns.add(curve.column)
  }
  return [...columns]
}

export function validateSpec(spec: FigureSpec, table: Table, path: string): void {
  for (const column of mappedColumns(spec)) {
    if (!table.header.includes(column)) {
      throw new MissingColumn(`${path} is missing column '${column}'`)
    }
  }
}

/** Collect finite (and, on log axes, positive) y values of one panel. */
function panelValues(panel: PanelSpec, table: Table): number[] {
  const values: number[] = []
  for (const curve of panel.curves) {
    for (const row of table.rows) {
      const v = row[curve.column]
      if (Number.isFinite(v) && (!panel.yLog || v > 0)) values.push(v)
    }
  }
  return values
}

function curvePath(
  table: Table,
  xColumn: string,
  curve: CurveSpec,
  x: (v: number) => number,
  y: (v: number) => number,
  yLog: boolean,
): string {
  // pen-up at invalid points (log axes cannot show zeros or negatives)
  const parts: string[] = []
  let penDown = false
  for (const row of table.rows) {
    const xv = row[xColumn]
    const yv = row[curve.column]
    const ok = Number.isFinite(xv) && Number.isFinite(yv) && (!yLog || yv > 0)
    if (!ok) {
      penDown = false
      continue
    }
    parts.push(`${penDown ? 'L' : 'M'}${x(xv).toFixed(2)},${y(yv).toFixed(2)}`)
    penDown = true
  }
  return parts.join(' ')
}

function renderPanel(
  spec: FigureSpec,
  panel: PanelSpec,
  table: Table,
  offsetX: number,
): string {
  const innerWidth = PANEL_WIDTH - MARGIN.left - MARGIN.right
  const innerHeight = PANEL_HEIGHT - MARGIN.top - MARGIN.bottom
  const xs = table.rows.map((r) => r[spec.xColumn]).filter(Number.isFinite)
  const ys = panelValues(panel, table)
  if (xs.length === 0 || ys.length === 0) {
    throw new EmptyData(`panel '${panel.title}' has no drawable data`)
  }
  const x = scaleLinear()
    .domain([Math.min(...xs), Math.max(...xs)])
    .range([0, innerWidth])
    .nice()
  const yMin = Math.min(...ys)
  const yMax = Math.max(...ys)
  const y = panel.yLog
    ? scaleLog().domain([yMin, yMax]).range([innerHeight, 0]).nice()
    : scaleLinear()
        .domain([Math.min(yMin, 0), yMax])
        .range([innerHeight, 0])
        .nice()

  const parts: string[] = []
  parts.push(
    `<g transform="translate(${offsetX + MARGIN.left},${MARGIN.top})">`,
    `<rect x="0" y="0" width="${innerWidth}" height="${innerHeight}" fill="none" stroke="#444"/>`,
    `<text x="${innerWidth / 2}" y="-12" text-anchor="middle" font-size="14" font-weight="bold">${esc(panel.title)}</text>`,
  )

  const xTicks = x.ticks(6)
  for (const t of xTicks) {
    const px = x(t)
    parts.push(
      `<line x1="${px}" y1="${innerHeight}" x2="${px}" y2="${innerHeight + 5}" stroke="#444"/>`,
      `<line x1="${px}" y1="0" x2="${px}" y2="${innerHeight}" stroke="#ddd"/>`,
      `<text x="${px}" y="${innerHeight + 18}" text-anchor="middle" font-size="11">${esc(tickFormat(t))}</text>`,
    )
  }
  let yTicks = y.ticks(6)
  if (panel.yLog && yTicks.length > 9) {
    yTicks = yTicks.filter((t) => {
      const exp = Math.log10(t)
      return Math.abs(exp - Math.round(exp)) < 1e-9
    })
  }
  for (const t of yTicks) {
    const py = y(t)
    parts.push(
      `<line x1="-5" y1="${py}" x2="0" y2="${py}" stroke="#444"/>`,
      `<line x1="0" y1="${py}" x2="${innerWidth}" y2="${py}" stroke="#ddd"/>`,
      `<text x="-8" y="${py + 4}" text-anchor="end" font-size="11">${esc(tickFormat(t))}</text>`,
    )
  }
  parts.push(
    `<text x="${innerWidth / 2}" y="${innerHeight + 38}" text-anchor="middle" font-size="12">${esc(spec.xLabel)}</text>`,
    `<text transform="translate(${-MARGIN.left + 16},${innerHeight / 2}) rotate(-90)" text-anchor="middle" font-size="12">${esc(panel.yLabel)}</text>`,
  )

  for (const curve of panel.curves) {
    const d = curvePath(table, spec.xColumn, curve, x, y, panel.yLog)
    if (d.length > 0) {
      const dash = curve.dash ? ` stroke-dasharray="${curve.dash}"` : ''
      parts.push(
        `<path class="curve" data-column="${esc(curve.column)}" d="${d}" fill="none" stroke="${curve.color}" stroke-width="1.8"${dash}/>`,
      )
    }
  }

  panel.curves.forEach((curve, i) => {
    const ly = 14 + 16 * i
    const dash = curve.dash ? ` stroke-dasharray="${curve.dash}"` : ''
    parts.push(
      `<line x1="${innerWidth - 150}" y1="${ly}" x2="${innerWidth - 122}" y2="${ly}" stroke="${curve.color}" stroke-width="1.8"${dash}/>`,
      `<text x="${innerWidth - 116}" y="${ly + 4}" font-size="11">${esc(curve.label)}</text>`,
    )
  })
  parts.push('</g>')
  return parts.join('\n')
}

export function renderFigure(spec: FigureSpec, table: Table, path = '<table>'): string {
  validateSpec(spec, table, path)
  const width = PANEL_WIDTH * spec.panels.length
  const body = spec.panels
    .map((panel, i) => renderPanel(spec, panel, table, i * PANEL_WIDTH))
    .join('\n')
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${PANEL_HEIGHT}" viewBox="0 0 ${width} ${PANEL_HEIGHT}" font-family="sans-serif">`,
    `<rect width="${width}" height="${PANEL_HEIGHT}" fill="white"/>`,
    body,
    '</svg>',
  ].join('\n')
}

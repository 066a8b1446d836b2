import type { FigureSpec } from './figure.js'

const BLUE = '#1f77b4'
const RED = '#d62728'
const GREEN = '#2ca02c'
const PURPLE = '#9467bd'
const DASH_REFINED = '7 4'
const DASH_CLASSICAL = '2 3'

export const FIG1: FigureSpec = {
  name: 'fig1',
  xColumn: 'phi',
  xLabel: 'phi',
  panels: [
    {
      title: 'velocity part',
      yLabel: '|u| and bounds',
      yLog: false,
      curves: [
        { column: 'u_norm', label: '|u|', color: BLUE },
        { column: 'theta_u_r', label: 'refined bound', color: RED, dash: DASH_REFINED },
        { column: 'theta_u_c', label: 'classical bound', color: GREEN, dash: DASH_CLASSICAL },
      ],
    },
    {
      title: 'multiplier part',
      yLabel: '|p| and bounds',
      yLog: false,
      curves: [
        { column: 'p_norm', label: '|p|', color: BLUE },
        { column: 'theta_p_r', label: 'refined bound', color: RED, dash: DASH_REFINED },
        { column: 'theta_p_c', label: 'classical bound', color: GREEN, dash: DASH_CLASSICAL },
      ],
    },
  ],
}

export const FIG2: FigureSpec = {
  name: 'fig2',
  xColumn: 'phi',
  xLabel: 'phi',
  panels: [
    {
      title: 'velocity part',
      yLabel: '|u| and bounds',
      yLog: false,
      curves: [
        { column: 'u_norm', label: '|u|', color: BLUE },
        { column: 'theta_u_r', label: 'refined bound', color: RED, dash: DASH_REFINED },
        { column: 'theta_u_c', label: 'classical bound', color: GREEN, dash: DASH_CLASSICAL },
      ],
    },
    {
      title: 'multiplier part',
      yLabel: '|p| and bounds',
      yLog: false,
      curves: [
        { column: 'p_norm', label: '|p|', color: BLUE },
        { column: 'theta_p_r', label: 'refined bound', color: RED, dash: DASH_REFINED },
        { column: 'theta_p_r2', label: 'sharper refined bound', color: PURPLE, dash: '4 2' },
        { column: 'theta_p_c', label: 'classical bound', color: GREEN, dash: DASH_CLASSICAL },
      ],
    },
  ],
}

export const FIG3: FigureSpec = {
  name: 'fig3',
  xColumn: 'lam',
  xLabel: 'lambda',
  panels: [
    {
      title: 'Scott-Vogelius velocity',
      yLabel: 'H1 seminorm',
      yLog: true,
      curves: [
        { column: 'u_norm_SV', label: '|grad u_SV|', color: BLUE },
        { column: 'theta_u_r', label: 'refined bound', color: RED, dash: DASH_REFINED },
        { column: 'theta_u_c', label: 'classical bound', color: GREEN, dash: DASH_CLASSICAL },
      ],
    },
    {
      title: 'Taylor-Hood velocity',
      yLabel: 'H1 seminorm',
      yLog: true,
      curves: [
        { column: 'u_norm_TH', label: '|grad u_TH|', color: BLUE },
        { column: 'theta_u_r', label: 'refined bound', color: RED, dash: DASH_REFINED },
        { column: 'theta_u_c', label: 'classical bound', color: GREEN, dash: DASH_CLASSICAL },
      ],
    },
    {
      title: 'pressures',
      yLabel: 'L2 norm',
      yLog: true,
      curves: [
        { column: 'p_norm_SV', label: '|p_SV|', color: BLUE },
        { column: 'p_norm_TH', label: '|p_TH|', color: PURPLE },
        { column: 'theta_p_r', label: 'refined reference', color: RED, dash: DASH_REFINED },
        { column: 'theta_p_c', label: 'classical bound', color: GREEN, dash: DASH_CLASSICAL },
      ],
    },
  ],
}

export const FIG4: FigureSpec = {
  name: 'fig4',
  xColumn: 't',
  xLabel: 'time',
  panels: [
    {
      title: 'potential-flow velocity error',
      yLabel: 'L2 error',
      yLog: true,
      curves: [
        { column: 'err_TH', label: 'Taylor-Hood', color: PURPLE },
        { column: 'err_SV', label: 'Scott-Vogelius', color: BLUE },
      ],
    },
  ],
}

export const ALL_SPECS: Record<string, FigureSpec> = {
  fig1: FIG1,
  fig2: FIG2,
  fig3: FIG3,
  fig4: FIG4,
}

import { runFigureScript } from './render.js'
import { FIG4 } from './specs.js'

process.exitCode = runFigureScript(FIG4)

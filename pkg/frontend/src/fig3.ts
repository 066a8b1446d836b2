import { runFigureScript } from './render.js'
import { FIG3 } from './specs.js'

process.exitCode = runFigureScript(FIG3)

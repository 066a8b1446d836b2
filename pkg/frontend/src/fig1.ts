import { runFigureScript } from './render.js'
import { FIG1 } from './specs.js'

process.exitCode = runFigureScript(FIG1)

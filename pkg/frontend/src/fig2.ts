import { runFigureScript } from './render.js'
import { FIG2 } from './specs.js'

process.exitCode = runFigureScript(FIG2)

# serviços: álgebra de tensores, dinâmica, análise, modelos estocásticos, aprendizado e formatos

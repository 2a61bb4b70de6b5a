# contagio_hipergrafo package init
__version__ = "0.1"

from setuptools import setup, find_packages

setup(
    name="contagio_hipergrafo",
    version="0.1",
    packages=find_packages(exclude=["tests"]),  # contagio_hipergrafo e services
    install_requires=[
        "numpy>=1.24.0",
        "pandas>=2.0.0",
        "scipy>=1.10.0",
        "networkx>=2.6",
    ],
    entry_points={"console_scripts": ["contagio=contagio_hipergrafo.cli:main"]},
)

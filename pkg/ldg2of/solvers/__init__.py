# Marks solvers as a Python package

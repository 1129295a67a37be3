# Marks conformal as a Python package

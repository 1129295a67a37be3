# Marks energy as a Python package

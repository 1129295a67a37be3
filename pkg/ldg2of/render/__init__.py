# Marks render as a Python package

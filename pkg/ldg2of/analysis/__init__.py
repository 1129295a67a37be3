# Marks analysis as a Python package

# Marks tensor as a Python package

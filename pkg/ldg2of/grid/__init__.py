# Marks grid as a Python package

# Marks common as a Python package

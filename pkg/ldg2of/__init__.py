# This file marks the ldg2of directory as a Python package

# Computational core

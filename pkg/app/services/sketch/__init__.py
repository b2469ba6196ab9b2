# Sketch package

# Recovery package

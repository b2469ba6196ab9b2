# Bench package

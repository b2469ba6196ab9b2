# Coding package

# API Routes package

#!/usr/bin/env python3
"""
Serve the document exchange API; reloads on code changes outside production.
"""
import uvicorn

from app.core.config import settings

if __name__ == "__main__":
    uvicorn.run(
        "app.main:app",
        host=settings.HOST,
        port=settings.PORT,
        reload=settings.ENVIRONMENT.lower() == "development"
    )

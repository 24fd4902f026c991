"""Main FastAPI application entry point."""

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from fptpwl.api import routes
from fptpwl.core.config import settings
from fptpwl.utils.helpers import setup_logging

setup_logging(settings.LOG_LEVEL)

app = FastAPI(
    title=settings.APP_NAME,
    version=settings.VERSION,
    description=settings.DESCRIPTION,
    docs_url="/docs",
    redoc_url="/redoc",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(routes.router)


@app.get("/")
async def root():
    """Root endpoint with service information."""
    return {"message": f"{settings.APP_NAME} API", "version": settings.VERSION, "status": "healthy"}


@app.get("/health")
async def health():
    """Health check with the active configuration."""
    return {"status": "healthy", "version": settings.VERSION, "config": settings.get_config_summary()}


def serve() -> None:
    """Console-script entry point."""
    import uvicorn

    uvicorn.run("fptpwl.main:app", host=settings.HOST, port=settings.PORT)


if __name__ == "__main__":
    serve()

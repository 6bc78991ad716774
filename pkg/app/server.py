from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from .api import simulations_router, diagnostics_router, forecasts_router
from .factory import get_settings

settings = get_settings()

app = FastAPI(
    title=settings.app_name,
    description="Plain and standardized LASSO for predictive regressions with persistent regressors",
    version=settings.app_version,
    docs_url="/docs",
    redoc_url="/redoc",
)

# Configure CORS using settings
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.cors.origins_list,
    allow_credentials=settings.cors.allow_credentials,
    allow_methods=settings.cors.allow_methods,
    allow_headers=settings.cors.allow_headers,
)

# Include API routers
app.include_router(simulations_router)
app.include_router(diagnostics_router)
app.include_router(forecasts_router)


@app.get("/")
def read_root():
    return {
        "message": "Persistent LASSO API",
        "version": settings.app_version,
        "environment": settings.environment,
        "endpoints": {
            "simulations": "/simulations",
            "diagnostics": "/diagnostics",
            "forecasts": "/forecasts",
            "docs": "/docs",
        },
    }


@app.get("/health")
async def health_check():
    """Health check endpoint for monitoring"""
    return {
        "status": "healthy",
        "environment": settings.environment,
        "solver": {
            "tol": settings.solver.tol,
            "max_sweeps": settings.solver.max_sweeps,
        },
    }

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from config.config import configure_logging, get_settings
from pacal import __version__

configure_logging(get_settings())

# Create FastAPI app
app = FastAPI(title="pacal API")

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Import and include routers
from pacal.api.compute import router as compute_router
app.include_router(compute_router, prefix="/api")

@app.get("/")
async def root():
    return {
        "name": "pacal API",
        "version": __version__,
        "status": "running",
        "description": "Curvature, transport, geodesics and identity checks on pointwise affine spaces",
        "documentation": "/docs",
    }

"""hajjguard: official/unofficial classification of Hajj and Umrah
travel-agency mobile apps from Indonesian description text plus permission
and store metadata."""

__version__ = "0.1.0"

from .serializer import SerializerUtils

__all__ = ["SerializerUtils"]

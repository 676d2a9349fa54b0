"""Optional external backends: F0 extraction and pretrained text encoders."""

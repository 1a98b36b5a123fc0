"""Embedding extraction from an image folder with a ResNet backbone.

The input directory holds one subfolder per class.  Images are resized to
a 256 shorter side, center-cropped to 224 and normalized with the usual
pretrained-backbone statistics.  Pooled mode exports the penultimate
global-average vector (512 channels for the default 18-layer residual
network); grid mode adaptively pools the last convolutional map to
``grid_size`` x ``grid_size`` nodes.  Record order is deterministic
(sorted class names, sorted file paths), and the backbone runs in eval
mode, so two runs over the same folder produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError
from torch import nn
from torchvision import models, transforms

from .writer import KIND_GRID, KIND_POOLED, write_fseb

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp"}

_PREPROCESS = transforms.Compose([
    transforms.Resize(256),
    transforms.CenterCrop(224),
    transforms.ToTensor(),
    transforms.Normalize(mean=[0.485, 0.456, 0.406], std=[0.229, 0.224, 0.225]),
])

_BACKBONES = {
    "resnet18": (models.resnet18, 512),
    "resnet34": (models.resnet34, 512),
    "resnet50": (models.resnet50, 2048),
}


@dataclass
class ExtractorConfig:
    input_dir: str
    output: str
    mode: str = "pooled"
    grid_size: int = 5
    backbone: str = "resnet18"
    weights: str = "default"  # "default" | "random" | path to a state dict
    device: str = "cpu"
    batch_size: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("pooled", "grid"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "grid" and self.grid_size < 1:
            raise ValueError("grid size must be >= 1")
        if self.backbone not in _BACKBONES:
            raise ValueError(f"unknown backbone {self.backbone!r}; "
                             f"choose from {sorted(_BACKBONES)}")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")


@dataclass
class ExtractSummary:
    records: int
    classes: list
    dim: int
    height: int
    width: int
    skipped: int
    skipped_files: list = field(default_factory=list)


def build_backbone(config: ExtractorConfig) -> tuple:
    """Convolutional trunk (everything before pooling) and its channel width."""
    ctor, channels = _BACKBONES[config.backbone]
    if config.weights == "default":
        net = ctor(weights="DEFAULT")
    elif config.weights == "random":
        # deterministic initialization stands in for published weights when
        # they cannot be downloaded; embeddings are still a fixed function
        torch.manual_seed(config.seed)
        net = ctor(weights=None)
    else:
        net = ctor(weights=None)
        state = torch.load(config.weights, map_location="cpu", weights_only=True)
        net.load_state_dict(state)
    trunk = nn.Sequential(*list(net.children())[:-2])  # drop avgpool and fc
    trunk.eval()
    trunk.to(config.device)
    return trunk, channels


def _iter_class_images(input_dir: Path):
    classes = sorted(p.name for p in input_dir.iterdir() if p.is_dir())
    if not classes:
        raise ValueError(f"no class subfolders in {input_dir}")
    for label, name in enumerate(classes):
        files = sorted(p for p in (input_dir / name).iterdir()
                       if p.suffix.lower() in IMAGE_SUFFIXES)
        yield label, name, files
    return


def extract(config: ExtractorConfig) -> ExtractSummary:
    input_dir = Path(config.input_dir)
    if not input_dir.is_dir():
        raise ValueError(f"no such directory: {input_dir}")
    trunk, channels = build_backbone(config)
    if config.mode == "pooled":
        pool = nn.AdaptiveAvgPool2d((1, 1))
        height = width = 1
        kind = KIND_POOLED
    else:
        pool = nn.AdaptiveAvgPool2d((config.grid_size, config.grid_size))
        height = width = config.grid_size
        kind = KIND_GRID

    class_names = []
    batch, batch_labels = [], []
    rows, labels = [], []
    skipped = []

    def flush():
        if not batch:
            return
        with torch.no_grad():
            feats = pool(trunk(torch.stack(batch).to(config.device)))
        # (B, C, H, W) -> channel-major rows (h*W + w)*C + c
        feats = feats.permute(0, 2, 3, 1).reshape(len(batch), -1)
        rows.append(feats.cpu().numpy().astype(np.float32))
        labels.extend(batch_labels)
        batch.clear()
        batch_labels.clear()

    for label, name, files in _iter_class_images(input_dir):
        class_names.append(name)
        decoded = 0
        for path in files:
            try:
                with Image.open(path) as img:
                    tensor = _PREPROCESS(img.convert("RGB"))
            except (UnidentifiedImageError, OSError) as exc:
                skipped.append(str(path))
                print(f"warning: skipping undecodable image {path}: {exc}")
                continue
            batch.append(tensor)
            batch_labels.append(label)
            decoded += 1
            if len(batch) >= config.batch_size:
                flush()
        if decoded == 0:
            raise ValueError(f"class {name!r} has no decodable image")
    flush()

    values = np.vstack(rows) if rows else np.zeros((0, channels * height * width), np.float32)
    write_fseb(config.output, class_names, kind, channels, height, width,
               ids=np.arange(len(labels)), labels=np.asarray(labels), values=values)
    return ExtractSummary(records=len(labels), classes=class_names,
                          dim=channels, height=height, width=width,
                          skipped=len(skipped), skipped_files=skipped)

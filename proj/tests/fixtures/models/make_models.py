"""Regenerates the tiny ONNX models used by the inference tests.

    python3 make_models.py [out_dir]

Weights are set by hand so every model has a known closed-form answer.
Requires torch and onnx.
"""

import json
import os
import sys

import onnx
import torch
from torch import nn
from torch.nn import functional as F


class GreenLogits(nn.Module):
    """Two-class logits; class 1 wins where the normalized pixel is greener
    than the mean of red and blue by more than 0.1."""

    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(3, 2, kernel_size=1)
        with torch.no_grad():
            self.conv.weight.zero_()
            self.conv.bias.zero_()
            self.conv.weight[1, :, 0, 0] = torch.tensor([-0.5, 1.0, -0.5])
            self.conv.bias[1] = -0.1

    def forward(self, x):
        return self.conv(x)


class GreenSigmoid(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(3, 1, kernel_size=1)
        with torch.no_grad():
            self.conv.weight[0, :, 0, 0] = torch.tensor([-20.0, 40.0, -20.0])
            self.conv.bias[0] = -2.0

    def forward(self, x):
        return torch.sigmoid(self.conv(x))


class Constant(nn.Module):
    """Zero-weight 1x1 conv whose bias is the output, pooled to one scalar."""

    def __init__(self, value):
        super().__init__()
        self.conv = nn.Conv2d(3, 1, 1)
        with torch.no_grad():
            self.conv.weight.zero_()
            self.conv.bias.fill_(value)

    def forward(self, x):
        return torch.flatten(F.adaptive_avg_pool2d(self.conv(x), 1), 1)


class GreenShare(nn.Module):
    """Regression head: percent of pixels whose green channel exceeds 0.7.
    A steep sigmoid stands in for the comparison (OpenCV's importer lacks
    Greater); exact enough unless green sits near 0.7."""

    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(3, 1, 1)
        with torch.no_grad():
            self.conv.weight.copy_(torch.tensor([0.0, 200.0, 0.0]).view(1, 3, 1, 1))
            self.conv.bias.fill_(-140.0)

    def forward(self, x):
        green = torch.sigmoid(self.conv(x))
        return torch.flatten(F.adaptive_avg_pool2d(green, 1), 1) * 100.0


class ThreeClass(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(3, 3, kernel_size=1)

    def forward(self, x):
        return self.conv(x)


class OneChannelIn(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(1, 2, kernel_size=1)

    def forward(self, x):
        return self.conv(x)


def export(model, path, shape, dynamic=False, metadata=None):
    model.eval()
    dummy = torch.rand(*shape)
    axes = {"image": {2: "height", 3: "width"}, "output": {2: "height", 3: "width"}} if dynamic else None
    torch.onnx.export(
        model,
        dummy,
        path,
        input_names=["image"],
        output_names=["output"],
        opset_version=11,
        dynamic_axes=axes,
        dynamo=False,
    )
    proto = onnx.load(path)
    for key, value in (metadata or {}).items():
        entry = proto.metadata_props.add()
        entry.key = key
        entry.value = value
    onnx.save(proto, path)


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
    torch.manual_seed(0)

    export(GreenLogits(), os.path.join(out, "seg_logits.onnx"), (1, 3, 32, 32))
    with open(os.path.join(out, "seg_logits.json"), "w") as f:
        json.dump({"mean": [0.5, 0.5, 0.5], "std": [0.5, 0.5, 0.5]}, f)

    export(
        GreenSigmoid(),
        os.path.join(out, "seg_sigmoid.onnx"),
        (1, 3, 16, 16),
        dynamic=True,
        metadata={"mean": "[0.0, 0.0, 0.0]", "std": "[0.5, 0.5, 0.5]"},
    )
    export(Constant(-3.2), os.path.join(out, "regress_negative.onnx"), (1, 3, 8, 8))
    export(Constant(12.5), os.path.join(out, "regress_constant.onnx"), (1, 3, 8, 8))
    export(GreenShare(), os.path.join(out, "regress_green_share.onnx"), (1, 3, 16, 16))
    export(ThreeClass(), os.path.join(out, "bad_output_channels.onnx"), (1, 3, 8, 8))
    export(OneChannelIn(), os.path.join(out, "bad_input_channels.onnx"), (1, 1, 8, 8))


if __name__ == "__main__":
    main()

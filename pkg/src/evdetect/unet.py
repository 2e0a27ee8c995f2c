"""U-Net style 1D sequence-to-sequence backbone with event or epoch heads.

Stages are listed encoder-first: cumulative stride factors rise to the
bottleneck, then fall again through the decoder. Each decoder stage
concatenates the skip features of the encoder stage with the same stride
factor onto its (nearest-neighbor) upsampled input. The event head is two
independent convolutions (center, duration) on the final stage's features;
the epoch head is a single convolution producing logits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .autodiff import ops
from .autodiff.ops import BatchNormState
from .autodiff.tensor import Tensor


@dataclass(frozen=True)
class StageSpec:
    filters: int
    kernel_size: int
    stride_factor: int  # cumulative downsample factor of this stage's output
    blocks: int = 1
    dropout: float = 0.0  # between blocks, training mode only


@dataclass(frozen=True)
class BackboneConfig:
    stages: tuple[StageSpec, ...]
    head: str = "event"  # "event" | "epoch"
    head_kernel: int = 7
    input_channels: int = 1
    separable: bool = False
    dtype: str = "float32"

    def __post_init__(self) -> None:
        if self.head not in ("event", "epoch"):
            raise ValueError(f"head must be 'event' or 'epoch', got {self.head!r}")
        if self.head_kernel < 1 or self.input_channels < 1:
            raise ValueError("head_kernel and input_channels must be >= 1")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be 'float32' or 'float64'")
        object.__setattr__(self, "stages", tuple(self.stages))


# default backbone: strides step by 4 down to 1024x and back up to 16x,
# single conv block per encoder stage, two per bottleneck/decoder stage
FULL_STAGES = (
    StageSpec(32, 20, 1),
    StageSpec(64, 20, 4),
    StageSpec(64, 15, 16),
    StageSpec(64, 15, 64),
    StageSpec(64, 10, 256),
    StageSpec(64, 5, 1024, blocks=2),
    StageSpec(64, 10, 256, blocks=2),
    StageSpec(64, 15, 64, blocks=2),
    StageSpec(64, 15, 16, blocks=2),
)

# separable-conv variant: two blocks everywhere past stage 0, one extra depth
# level, dropout between the decoder stages' two blocks
SEPARABLE_STAGES = (
    StageSpec(32, 20, 1),
    StageSpec(64, 20, 4, blocks=2),
    StageSpec(64, 15, 16, blocks=2),
    StageSpec(64, 15, 64, blocks=2),
    StageSpec(64, 10, 256, blocks=2),
    StageSpec(64, 5, 1024, blocks=2),
    StageSpec(64, 5, 4096, blocks=2),
    StageSpec(64, 5, 1024, blocks=2, dropout=0.1),
    StageSpec(64, 10, 256, blocks=2, dropout=0.1),
    StageSpec(64, 15, 64, blocks=2, dropout=0.1),
    StageSpec(64, 15, 16, blocks=2, dropout=0.1),
)

# multi-channel seizure-style stage table, kept as configuration data only;
# the attention-gated channel merging it was designed around is not built here
SEIZURE_STAGES = (
    StageSpec(16, 15, 1),
    StageSpec(32, 15, 4),
    StageSpec(64, 15, 16),
    StageSpec(64, 7, 64),
    StageSpec(128, 3, 256),
    StageSpec(128, 3, 1024),
    StageSpec(64, 3, 1024, blocks=2),
    StageSpec(64, 5, 256, blocks=2),
)

# small preset for tests and desk-scale experiments: same 4x laddering,
# bottleneck at 256x so the receptive field still spans the longest events
TINY_STAGES = (
    StageSpec(8, 7, 1),
    StageSpec(16, 7, 4),
    StageSpec(16, 7, 16),
    StageSpec(32, 5, 64),
    StageSpec(32, 5, 256, blocks=2),
    StageSpec(32, 5, 64, blocks=2),
    StageSpec(16, 5, 16, blocks=2),
)


def full_config(head: str = "event", input_channels: int = 1, dtype: str = "float32") -> BackboneConfig:
    return BackboneConfig(stages=FULL_STAGES, head=head, input_channels=input_channels, dtype=dtype)


def tiny_config(head: str = "event", input_channels: int = 1, dtype: str = "float32") -> BackboneConfig:
    return BackboneConfig(stages=TINY_STAGES, head=head, input_channels=input_channels, dtype=dtype)


def separable_config(head: str = "event", input_channels: int = 1, dtype: str = "float32") -> BackboneConfig:
    return BackboneConfig(
        stages=SEPARABLE_STAGES, head=head, head_kernel=1,
        input_channels=input_channels, separable=True, dtype=dtype,
    )


@dataclass
class ModelOutput:
    """Head outputs for one forward pass; sigmoid applied lazily for reading."""

    kind: str
    center_logits: Tensor | None = None
    duration_logits: Tensor | None = None
    logits: Tensor | None = None

    @property
    def center(self) -> np.ndarray:
        return ops.sigmoid_values(self.center_logits.values)

    @property
    def duration(self) -> np.ndarray:
        return ops.sigmoid_values(self.duration_logits.values)

    @property
    def probabilities(self) -> np.ndarray:
        return ops.sigmoid_values(self.logits.values)


def _validate_stages(stages: tuple[StageSpec, ...]) -> tuple[int, int]:
    """Returns (bottleneck index, total downsample factor)."""
    if not stages:
        raise ValueError("stage list is empty")
    for spec in stages:
        if spec.filters < 1 or spec.kernel_size < 1 or spec.stride_factor < 1 or spec.blocks < 1:
            raise ValueError(f"invalid stage {spec}")
    if stages[0].stride_factor != 1:
        raise ValueError("the first stage must run at the input rate (stride factor 1)")
    strides = [spec.stride_factor for spec in stages]
    peak = int(np.argmax(strides))
    encoder_strides = set()
    for i in range(1, len(stages)):
        prev_s, cur_s = strides[i - 1], strides[i]
        if i <= peak:
            if cur_s <= prev_s or cur_s % prev_s:
                raise ValueError(f"encoder stride factors must grow by integer steps, got {strides}")
            encoder_strides.add(prev_s)
        else:
            if cur_s >= prev_s or prev_s % cur_s:
                raise ValueError(f"decoder stride factors must shrink by integer steps, got {strides}")
            if cur_s not in encoder_strides:
                raise ValueError(
                    f"decoder stage at stride {cur_s} has no encoder stage to take skip features from"
                )
    return peak, strides[peak]


class _Block:
    """conv [+ batchnorm] + ELU; separable blocks use depthwise then pointwise."""

    def __init__(self, model: "UNet1d", name: str, in_ch: int, out_ch: int,
                 kernel: int, stride: int, use_bn: bool, separable: bool):
        self.stride = stride
        self.use_bn = use_bn
        self.separable = separable and in_ch > 1
        rng, dtype = model._rng, model._np_dtype
        if self.separable:
            self.dw_weight = model._param(f"{name}.dw_weight", _he_init(rng, (in_ch, 1, kernel), kernel, dtype))
            self.dw_bias = model._param(f"{name}.dw_bias", np.zeros(in_ch, dtype=dtype))
            self.pw_weight = model._param(f"{name}.pw_weight", _he_init(rng, (out_ch, in_ch, 1), in_ch, dtype))
            self.pw_bias = model._param(f"{name}.pw_bias", np.zeros(out_ch, dtype=dtype))
            self.groups = in_ch
        else:
            fan_in = in_ch * kernel
            self.weight = model._param(f"{name}.weight", _he_init(rng, (out_ch, in_ch, kernel), fan_in, dtype))
            self.bias = model._param(f"{name}.bias", np.zeros(out_ch, dtype=dtype))
        if use_bn:
            self.gamma = model._param(f"{name}.bn_gamma", np.ones(out_ch, dtype=dtype))
            self.beta = model._param(f"{name}.bn_beta", np.zeros(out_ch, dtype=dtype))
            self.bn_state = model._buffer(f"{name}.bn", BatchNormState.create(out_ch, dtype=dtype))

    def forward(self, x: Tensor, train: bool) -> Tensor:
        if self.separable:
            x = ops.conv1d(x, self.dw_weight, self.dw_bias, stride=self.stride, groups=self.groups)
            x = ops.conv1d(x, self.pw_weight, self.pw_bias, stride=1)
        else:
            x = ops.conv1d(x, self.weight, self.bias, stride=self.stride)
        if self.use_bn:
            x = ops.batchnorm1d(x, self.gamma, self.beta, self.bn_state, train=train)
        return ops.elu(x)


def _he_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, dtype) -> np.ndarray:
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)


class _Stage:
    def __init__(self, model: "UNet1d", index: int, spec: StageSpec, in_ch: int,
                 down_factor: int, separable: bool):
        self.spec = spec
        self.blocks: list[_Block] = []
        use_bn = index > 0  # the first stage has no normalization
        for b in range(spec.blocks):
            stride = down_factor if b == 0 else 1
            self.blocks.append(
                _Block(model, f"stage{index}.block{b}", in_ch, spec.filters,
                       spec.kernel_size, stride, use_bn, separable)
            )
            in_ch = spec.filters

    def forward(self, x: Tensor, train: bool, rng: np.random.Generator | None) -> Tensor:
        for b, block in enumerate(self.blocks):
            if b > 0 and self.spec.dropout > 0.0 and train:
                if rng is None:
                    raise ValueError("training with dropout requires an rng")
                x = ops.dropout(x, self.spec.dropout, rng, train=True)
            x = block.forward(x, train)
        return x


class UNet1d:
    """Backbone producing either (center, duration) signals or epoch logits.

    Parameters live in an ordered name -> Tensor map; batchnorm running
    statistics are separate buffers, included in checkpoints.
    """

    def __init__(self, config: BackboneConfig, seed: int = 0):
        self.config = config
        self._np_dtype = np.float32 if config.dtype == "float32" else np.float64
        self._rng = np.random.default_rng(seed)
        self._params: dict[str, Tensor] = {}
        self._buffers: dict[str, BatchNormState] = {}

        peak, total = _validate_stages(config.stages)
        self._bottleneck_index = peak
        self.total_downsample = total
        self.output_stride = config.stages[-1].stride_factor

        strides = [spec.stride_factor for spec in config.stages]
        self.stages: list[_Stage] = []
        self._up_factors: list[int] = []
        self._skip_strides: list[int] = []
        stage_out_ch: dict[int, int] = {}
        in_ch = config.input_channels
        for i, spec in enumerate(config.stages):
            if i == 0:
                down = 1
            elif i <= peak:
                down = strides[i] // strides[i - 1]
            else:
                down = 1
            if i > peak:
                self._up_factors.append(strides[i - 1] // strides[i])
                self._skip_strides.append(strides[i])
                in_ch = in_ch + stage_out_ch[strides[i]]
            self.stages.append(_Stage(self, i, spec, in_ch, down, config.separable))
            in_ch = spec.filters
            if i <= peak:
                stage_out_ch[strides[i]] = spec.filters

        feat_ch = config.stages[-1].filters
        dtype = self._np_dtype
        k = config.head_kernel
        if config.head == "event":
            self.center_weight = self._param("head.center_weight", _he_init(self._rng, (1, feat_ch, k), feat_ch * k, dtype))
            self.center_bias = self._param("head.center_bias", np.full(1, -2.0, dtype=dtype))
            self.duration_weight = self._param("head.duration_weight", _he_init(self._rng, (1, feat_ch, k), feat_ch * k, dtype))
            self.duration_bias = self._param("head.duration_bias", np.zeros(1, dtype=dtype))
        else:
            self.epoch_weight = self._param("head.epoch_weight", _he_init(self._rng, (1, feat_ch, k), feat_ch * k, dtype))
            self.epoch_bias = self._param("head.epoch_bias", np.full(1, -2.0, dtype=dtype))

    def _param(self, name: str, values: np.ndarray) -> Tensor:
        tensor = Tensor(values, requires_grad=True)
        self._params[name] = tensor
        return tensor

    def _buffer(self, name: str, state: BatchNormState) -> BatchNormState:
        self._buffers[name] = state
        return state

    def parameters(self) -> dict[str, Tensor]:
        return self._params

    def forward(self, x: np.ndarray, train: bool = False, rng: np.random.Generator | None = None) -> ModelOutput:
        x = np.asarray(x)
        if x.ndim == 2:
            x = x[np.newaxis, :, :]
        if x.ndim != 3 or x.shape[1] != self.config.input_channels:
            raise ValueError(
                f"expected input [B, {self.config.input_channels}, L], got shape {x.shape}"
            )
        if x.shape[2] % self.total_downsample:
            raise ValueError(
                f"input length {x.shape[2]} not divisible by the total stride {self.total_downsample}"
            )
        h = Tensor(np.ascontiguousarray(x, dtype=self._np_dtype))

        skips: dict[int, Tensor] = {}
        strides = [spec.stride_factor for spec in self.config.stages]
        decoder_i = 0
        for i, stage in enumerate(self.stages):
            if i > self._bottleneck_index:
                h = ops.upsample_nearest(h, self._up_factors[decoder_i])
                h = ops.concat_channels(skips[self._skip_strides[decoder_i]], h)
                decoder_i += 1
            h = stage.forward(h, train, rng)
            if i <= self._bottleneck_index:
                skips[strides[i]] = h

        if self.config.head == "event":
            center = ops.squeeze_channel(ops.conv1d(h, self.center_weight, self.center_bias))
            duration = ops.squeeze_channel(ops.conv1d(h, self.duration_weight, self.duration_bias))
            return ModelOutput(kind="event", center_logits=center, duration_logits=duration)
        logits = ops.squeeze_channel(ops.conv1d(h, self.epoch_weight, self.epoch_bias))
        return ModelOutput(kind="epoch", logits=logits)

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Parameters plus batchnorm running statistics, for checkpointing."""
        state = {name: tensor.values for name, tensor in self._params.items()}
        for name, buffer in self._buffers.items():
            state[f"{name}.running_mean"] = buffer.running_mean
            state[f"{name}.running_var"] = buffer.running_var
        return state

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        expected = self.state_arrays()
        missing = sorted(set(expected) - set(arrays))
        if missing:
            raise ValueError(f"checkpoint is missing entries: {missing[:5]}")
        for name, tensor in self._params.items():
            incoming = np.asarray(arrays[name], dtype=self._np_dtype)
            if incoming.shape != tensor.values.shape:
                raise ValueError(f"{name}: checkpoint shape {incoming.shape} != model shape {tensor.values.shape}")
            tensor.values[...] = incoming
        for name, buffer in self._buffers.items():
            buffer.running_mean[...] = np.asarray(arrays[f"{name}.running_mean"], dtype=self._np_dtype)
            buffer.running_var[...] = np.asarray(arrays[f"{name}.running_var"], dtype=self._np_dtype)


def build(config: BackboneConfig, seed: int = 0) -> UNet1d:
    return UNet1d(config, seed=seed)


def config_from_dict(data: dict) -> BackboneConfig:
    """BackboneConfig from a plain JSON-style dict (preset name or stage list)."""
    data = dict(data)
    preset = data.pop("preset", None)
    if preset is not None:
        presets = {"full": full_config, "tiny": tiny_config, "separable": separable_config}
        if preset not in presets:
            raise ValueError(f"unknown preset {preset!r}; choose from {sorted(presets)}")
        base = presets[preset]()
        allowed = {"head", "input_channels", "dtype", "head_kernel"}
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown backbone options {sorted(unknown)}")
        return replace(base, **data)
    stages = tuple(StageSpec(**stage) for stage in data.pop("stages"))
    return BackboneConfig(stages=stages, **data)

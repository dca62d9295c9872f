from typing import Dict, Type

from core.pipelines.base_pipeline import Pipeline, PipelineContext
from core.pipelines.presets import PRESET_CLASSES
from schema import PresetName


class PipelineFactory:
    """Factory class for creating preset pipelines"""

    def __init__(self):
        """Initialize the pipeline factory"""
        self.pipeline_classes: Dict[PresetName, Type[Pipeline]] = dict(PRESET_CLASSES)

    def create_pipeline(self, preset: PresetName, context: PipelineContext) -> Pipeline:
        """Create the pipeline of a preset"""
        preset = PresetName(preset)
        if preset not in self.pipeline_classes:
            raise ValueError(f"Unknown preset: {preset}")
        return self.pipeline_classes[preset](preset=preset, context=context)

"""Interactive promptable 3D tumor segmentation at desk scale."""

from .volgrid import (Geometry, ImageVolume, BinaryMask, CropRecord, AugmentConfig,
                      PreprocessRecord, VolumeError, load_volume, load_mask,
                      save_volume, zscore_normalize, resample, crop_to_foreground,
                      uncrop, augment, preprocess, restore_mask)
from .promptsim import (Prompt, PointPrompt, BoxPrompt, LassoPrompt, ScribblePrompt,
                        GuidanceConfig, PromptError, select_slice_weighted,
                        simulate_point_prompts, simulate_box_prompt,
                        simulate_scribble_prompt, simulate_lasso_prompt,
                        simulate_prompts, rasterize_prompt, encode_guidance,
                        prompt_to_json, prompt_from_json)
from .session import (SessionState, SessionError, create_session, add_prompt,
                      undo, export_result, save_transcript, replay_transcript)
from .synthgen import PhantomConfig, PRESETS, generate_phantom, generate_dataset
from .evalkit import dice, iou, run_benchmark, report_table, render_overlay

__version__ = "0.1.0"

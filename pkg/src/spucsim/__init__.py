"""Phase-matching geometry and synthetic CCD search for spontaneous parametric up-conversion."""
from .ccd import (CameraSpec, ExposureFrame, LimitReport, dark_frame, detect_in_region, intensity_upper_limit,
                  read_frame, subtract_dark, synthesize_frame, write_frame)
from .dispersion import (CrystalSpec, DispersionError, SellmeierModel, index_extraordinary, index_ordinary,
                         index_principal_extraordinary, load_dispersion)
from .geometry import RingFeature, ScreenGeometry, ScreenPattern, render_pattern, spdc_ring, spuc_arcs
from .kinematics import (BeamSpec, PhaseMatchError, PhaseMatchSolution, direction_from_angles, energy_residual,
                         exit_beam, idler_wavelength, refract_face, solve_emission_angles, stimulated_direction)
from .scenario import Scenario, ScenarioError, emit_outputs, load_scenario, run_scenario

__version__ = "0.1.0"

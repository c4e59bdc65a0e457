"""Pure projective-geometry kernel.

Pinhole projection, closed-form perspective predictors, pointmap sampling,
and the per-frame maps (depth-gradient, boundary-distance) that feed anchor
filtering. Everything here is a pure function over immutable inputs.

Conventions:
  * image u grows rightwards (columns), v grows downwards (rows);
  * pointmap sampling is nearest-pixel with half-away-from-zero rounding;
  * the image border counts as background for boundary distances.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import InvalidSample, NonPositiveDepth, TransverseMotion

_DEPTH_EPS = 0.0  # Z must be strictly positive


def project(point, intrinsics):
    """Project a 3D camera-frame point to pixel coordinates.

    ``point`` is a length-3 sequence (X, Y, Z) in camera coordinates,
    ``intrinsics`` anything with fx, fy, cx, cy attributes.

    Raises NonPositiveDepth when Z <= 0.
    """
    x, y, z = float(point[0]), float(point[1]), float(point[2])
    if z <= _DEPTH_EPS:
        raise NonPositiveDepth(f"cannot project point at depth {z}")
    u = intrinsics.fx * x / z + intrinsics.cx
    v = intrinsics.fy * y / z + intrinsics.cy
    return np.array([u, v], dtype=np.float64)


def project_array(points, intrinsics):
    """Vectorised projection of an (N, 3) array; no depth check."""
    pts = np.asarray(points, dtype=np.float64)
    z = pts[..., 2]
    u = intrinsics.fx * pts[..., 0] / z + intrinsics.cx
    v = intrinsics.fy * pts[..., 1] / z + intrinsics.cy
    return np.stack([u, v], axis=-1)


def projected_height(f, phys_height, z):
    """Pixel height of a vertical extent ``phys_height`` at depth ``z``."""
    if z <= 0:
        raise NonPositiveDepth(f"depth must be positive, got {z}")
    if phys_height <= 0:
        raise ValueError(f"physical height must be positive, got {phys_height}")
    return f * phys_height / z


def predict_height_delta(f, phys_height, z1, z2):
    """Exact change in projected height when depth moves z1 -> z2.

    Equals projected_height(f, H, z2) - projected_height(f, H, z1); the
    product form makes the inverse-square depth suppression explicit.
    """
    if z1 <= 0 or z2 <= 0:
        raise NonPositiveDepth(f"depths must be positive, got {z1}, {z2}")
    return -f * phys_height * (z2 - z1) / (z1 * z2)


def predict_pixel_delta(fx, x, z, dx, dz):
    """Exact horizontal pixel displacement for a 3D displacement (dx, dz).

    The principal point cancels; the result equals the projection of the
    moved point minus the projection of the original point.
    """
    if z <= 0 or z + dz <= 0:
        raise NonPositiveDepth(f"depths must be positive, got {z}, {z + dz}")
    return fx * (z * dx - x * dz) / (z * (z + dz))


def round_half_away(x):
    """Round to nearest integer, halves away from zero (not banker's)."""
    x = np.asarray(x, dtype=np.float64)
    return np.copysign(np.floor(np.abs(x) + 0.5), x).astype(np.int64)


def sample_pointmap(pointmaps, t, pixel):
    """Nearest-pixel sample of the world pointmap at frame ``t``.

    ``pixel`` is (u, v); sampling rounds each coordinate half away from
    zero. Raises InvalidSample when the validity channel is false there.
    """
    u, v = float(pixel[0]), float(pixel[1])
    row = int(round_half_away(v))
    col = int(round_half_away(u))
    tt = int(t)
    height, width = pointmaps.points.shape[1:3]
    if not (0 <= row < height and 0 <= col < width):
        raise InvalidSample(f"pixel ({u}, {v}) outside {width}x{height} image")
    if not pointmaps.valid[tt, row, col]:
        raise InvalidSample(f"pointmap invalid at frame {tt}, pixel ({col}, {row})")
    return pointmaps.points[tt, row, col].astype(np.float64)


def depth_gradient_map(pointmaps, t):
    """Sobel gradient magnitude of the Z channel at frame ``t``.

    3x3 kernels with edge replication; invalid pixels participate with
    their stored values (callers mask by validity downstream).
    """
    z = np.asarray(pointmaps.points[int(t), :, :, 2], dtype=np.float64)
    gx = ndimage.sobel(z, axis=1, mode="nearest")
    gy = ndimage.sobel(z, axis=0, mode="nearest")
    return np.hypot(gx, gy)


def boundary_distance_map(mask):
    """Euclidean distance from each foreground pixel to the background.

    The image border counts as background, so a lone foreground pixel
    scores 1. Background pixels are exactly 0.
    """
    mask = np.asarray(mask, dtype=bool)
    padded = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    dist = ndimage.distance_transform_edt(padded)
    return dist[1:-1, 1:-1]


def vanishing_point_of_direction(direction, intrinsics):
    """Image point toward which a 3D motion direction converges.

    Raises TransverseMotion when the direction has (numerically) no depth
    component, i.e. the vanishing point is at infinity.
    """
    d = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(d)
    if norm == 0 or abs(d[2]) <= 1e-9 * norm:
        raise TransverseMotion("motion direction has no depth component")
    u = intrinsics.fx * d[0] / d[2] + intrinsics.cx
    v = intrinsics.fy * d[1] / d[2] + intrinsics.cy
    return np.array([u, v], dtype=np.float64)

#ifndef CV2X_CV2X_HPP
#define CV2X_CV2X_HPP

#include "cv2x/channel.hpp"
#include "cv2x/common.hpp"
#include "cv2x/config.hpp"
#include "cv2x/engine.hpp"
#include "cv2x/experiment.hpp"
#include "cv2x/grid.hpp"
#include "cv2x/mobility.hpp"
#include "cv2x/results.hpp"
#include "cv2x/sps.hpp"

#endif

#pragma once

#include "pitchlines/classifier.hpp"
#include "pitchlines/config.hpp"
#include "pitchlines/dataset.hpp"
#include "pitchlines/elsed.hpp"
#include "pitchlines/errors.hpp"
#include "pitchlines/eval.hpp"
#include "pitchlines/geometry.hpp"
#include "pitchlines/image.hpp"
#include "pitchlines/image_io.hpp"
#include "pitchlines/overlay.hpp"
#include "pitchlines/pso.hpp"
#include "pitchlines/synthetic.hpp"

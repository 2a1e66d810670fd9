"""Assessment core: proficiency levels, rubrics, and the scoring rule."""

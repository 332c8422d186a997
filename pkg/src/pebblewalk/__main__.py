from pebblewalk.cli import main

raise SystemExit(main())
